#pragma once

#include <cmath>
#include <numbers>

#include "gpeopt/core/error.hpp"

namespace gpeopt {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double h = 2.0 * std::numbers::pi * hbar;
inline constexpr double mass_rb87 = 1.44e-25;  // kg
inline constexpr double micrometre = 1e-6;
inline constexpr double nanometre = 1e-9;
}  // namespace constants

/// Length unit l0 [m], time unit t0 = m l0^2 / hbar [s] and the coupling
/// for a given atom number.
struct UnitSystem {
  double mass = constants::mass_rb87;
  double l0 = constants::micrometre;

  double t0() const noexcept { return mass * l0 * l0 / constants::hbar; }
  double t0_ms() const noexcept { return 1e3 * t0(); }

  /// Angular frequency [rad/s] to 1/t0.
  double angular(double omega_si) const noexcept { return omega_si * t0(); }
  /// Ordinary frequency [Hz] to angular 1/t0.
  double from_hz(double f) const noexcept { return 2.0 * std::numbers::pi * f * t0(); }
  /// Energy [J] to units of hbar/t0.
  double energy(double e_si) const noexcept { return e_si * t0() / constants::hbar; }
  double time_from_ms(double ms) const noexcept { return 1e-3 * ms / t0(); }
  double time_to_ms(double t) const noexcept { return t * t0_ms(); }
  double length_from_um(double um) const noexcept { return um * constants::micrometre / l0; }
};

struct DimensionlessUnits {
  double g = 0.0;
  double t0 = 0.0;  // s
};

/// g = 4 pi N a_s / l0 and t0 = m l0^2 / hbar (SI inputs).
inline DimensionlessUnits dimensionless_units(double n_atoms, double a_s, double mass, double l0) {
  if (!(n_atoms >= 0.0) || !(a_s > 0.0) || !(mass > 0.0) || !(l0 > 0.0))
    throw ConfigError("units: N must be non-negative and a_s, m, l0 positive");
  return {4.0 * std::numbers::pi * n_atoms * a_s / l0, mass * l0 * l0 / constants::hbar};
}

}  // namespace gpeopt
