#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/io/units.hpp"
#include "gpeopt/potentials/trap.hpp"

namespace gpeopt {

/// g_1d = g * int |phi~(y,z)|^4 dy dz, with phi~ the x = 0 plane of a 3D
/// state renormalized over that plane.
inline double effective_g1d(const ComplexField& phi3d, double g) {
  const Grid& grid = phi3d.grid;
  if (grid.rank() != 3) throw ShapeError("effective_g1d: need a rank-3 state");
  const int ix = grid.points(0) / 2;  // x = 0 lies on the grid for even point counts
  const int ny = grid.ny(), nz = grid.nz();
  const double da = grid.spacing(1) * grid.spacing(2);
  double n2 = 0.0, n4 = 0.0;
  for (int iy = 0; iy < ny; ++iy)
    for (int iz = 0; iz < nz; ++iz) {
      const double rho = std::norm(phi3d.values[grid.index(ix, iy, iz)]);
      n2 += rho;
      n4 += rho * rho;
    }
  n2 *= da;
  n4 *= da;
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalError("effective_g1d: state vanishes on the x = 0 plane");
  return g * n4 / (n2 * n2);
}

/// Coupling in h Hz um for reporting: g_1d hbar l0 / t0 divided by h.
inline double g1d_h_hz_um(double g1d, const UnitSystem& u) {
  return g1d / (2.0 * std::numbers::pi * u.t0()) * (u.l0 / constants::micrometre);
}

/// The x-axis restriction of a 3D trap. Evaluating a TrapModel on a rank-1
/// grid already samples V(x, 0, 0); this type pairs that with the coupling
/// and the grid so the 1D problem is built once.
struct Reduced1dModel {
  TrapModel model;  ///< unchanged: same controls, same jacobians
  double g1d = 0.0;
  Grid grid;

  RealField potential(std::span<const double> lambda) const { return eval_potential(model, lambda, grid); }
  double g1d_h_hz_um(const UnitSystem& u) const { return gpeopt::g1d_h_hz_um(g1d, u); }
};

/// Rank-1 grid on the x axis of a 3D grid (same points and extent).
inline Grid x_axis_grid(const Grid& grid) {
  if (grid.rank() != 3) throw ShapeError("x_axis_grid: need a rank-3 grid");
  return Grid({grid.points(0)}, {grid.half_length(0)});
}

inline Reduced1dModel reduce_model(const TrapModel& model, const Grid& grid1d, double g1d) {
  if (grid1d.rank() != 1) throw ShapeError("reduce_model: need a rank-1 grid");
  if (!(g1d >= 0.0) || !std::isfinite(g1d)) throw ConfigError("reduce_model: g1d must be finite and non-negative");
  return {model, g1d, grid1d};
}

/// Reduction from a 3D ground state on grid3d: the 1D grid is its x axis.
inline Reduced1dModel reduce_model(const TrapModel& model, const ComplexField& phi3d, double g) {
  return reduce_model(model, x_axis_grid(phi3d.grid), effective_g1d(phi3d, g));
}

}  // namespace gpeopt
