#pragma once

#include <algorithm>
#include <cmath>

#include "gpeopt/core/fft.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/gpe/split_step.hpp"

namespace gpeopt {

struct EnergyParts {
  double kinetic = 0.0;      ///< (1/2) int |grad psi|^2
  double potential = 0.0;    ///< int V |psi|^2
  double interaction = 0.0;  ///< int |psi|^4 (multiply by g or g/2)

  double energy(double g) const noexcept { return kinetic + potential + 0.5 * g * interaction; }
  double chemical_potential(double g) const noexcept { return kinetic + potential + g * interaction; }
};

/// Energy functional pieces, kinetic part spectrally (Parseval).
inline EnergyParts energy_parts(const SplitStep& ss, std::span<const cplx> psi, std::span<const double> v, ComplexArray& scratch) {
  const Grid& grid = ss.grid();
  const double dv = grid.cell_volume();
  scratch.assign(psi.begin(), psi.end());
  ss.plan().forward(scratch);
  const auto k2 = ss.k2();
  const double n = static_cast<double>(psi.size());
  EnergyParts e;
  e.kinetic = 0.5 * parallel_sum<double>(psi.size(), [&](std::size_t i) { return k2[i] * std::norm(scratch[i]); }) * dv / n;
  e.potential = parallel_sum<double>(psi.size(), [&](std::size_t i) { return v[i] * std::norm(psi[i]); }) * dv;
  e.interaction = parallel_sum<double>(psi.size(), [&](std::size_t i) {
                    const double r = std::norm(psi[i]);
                    return r * r;
                  }) *
                  dv;
  return e;
}

inline EnergyParts energy_parts(const ComplexField& psi, const RealField& v) {
  require_same_grid(psi, v, "energy");
  SplitStep ss(psi.grid);
  ComplexArray scratch;
  return energy_parts(ss, psi.values, v.values, scratch);
}

/// E = int (|grad psi|^2/2 + V|psi|^2 + (g/2)|psi|^4).
inline double energy(const ComplexField& psi, const RealField& v, double g) { return energy_parts(psi, v).energy(g); }

/// mu = int (|grad psi|^2/2 + V|psi|^2 + g|psi|^4) for normalized psi.
inline double chemical_potential(const ComplexField& psi, const RealField& v, double g) {
  return energy_parts(psi, v).chemical_potential(g);
}

/// 1 - |<psi_d, psi>|^2, clamped to [0, 1].
inline double infidelity(const ComplexField& psi, const ComplexField& psi_d) {
  require_same_grid(psi, psi_d, "infidelity");
  const double o = std::norm(inner_product(psi_d, psi));
  return std::clamp(1.0 - o, 0.0, 1.0);
}

/// <x> for a normalized state.
inline Vec3 center_of_mass(const ComplexField& psi) {
  const Grid& g = psi.grid;
  Vec3 c{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Vec3 r = g.position(i);
    const double w = std::norm(psi.values[i]);
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(a)] += w * r[static_cast<std::size_t>(a)];
  }
  for (double& x : c) x *= g.cell_volume();
  return c;
}

}  // namespace gpeopt
