#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "gpeopt/bdg/fd_operator.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/gpe/observables.hpp"
#include "gpeopt/gpe/split_step.hpp"
#include "gpeopt/potentials/trap.hpp"

namespace gpeopt {

enum class GroundStateIntegrator {
  split_step,  ///< imaginary-time Strang splitting, spectral kinetic term
  fd_rk4,      ///< classical RK4 on the 6th-order finite-difference Hamiltonian
};

struct GroundStateOptions {
  GroundStateIntegrator integrator = GroundStateIntegrator::split_step;
  double dtau_initial = 1e-2;
  double dtau_final = 1e-3;  ///< split step: schedule halves down to this level
  double dtau_min = 1e-5;    ///< halving after an energy increase stops here
  double energy_tol = 1e-10;
  double residual_tol = 1e-8;  ///< on ||phi_{k+1} - phi_k|| / dtau
  int energy_stride = 1;       ///< energy/residual checks every this many steps
  long max_iterations = 400000;
  std::optional<ComplexField> initial_guess;
};

struct GroundStateResult {
  ComplexField state;
  double mu = 0.0;
  double energy = 0.0;
  long iterations = 0;
  double residual = 0.0;
  double dtau = 0.0;
  int rejected = 0;
};

namespace detail {

inline ComplexField default_guess(const Grid& grid) {
  ComplexField g = sample_complex(grid, [&](double x, double y, double z) {
    const double sx = grid.half_length(0) / 4.0;
    double e = x * x / (sx * sx);
    if (grid.rank() == 3) {
      const double sy = grid.half_length(1) / 4.0, sz = grid.half_length(2) / 4.0;
      e += y * y / (sy * sy) + z * z / (sz * sz);
    }
    return cplx(std::exp(-0.5 * e), 0.0);
  });
  normalize(g);
  return g;
}

inline void normalize_in_place(std::span<cplx> psi, double dv) {
  const double n = std::sqrt(norm_squared(psi, dv));
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("ground state: wave function vanished or diverged");
  const double s = 1.0 / n;
  parallel_for(psi.size(), [&](std::size_t i) { psi[i] *= s; });
}

inline double distance(std::span<const cplx> a, std::span<const cplx> b, double dv) {
  return std::sqrt(parallel_sum<double>(a.size(), [&](std::size_t i) { return std::norm(a[i] - b[i]); }) * dv);
}

[[noreturn]] inline void not_converged(long it, double dtau, double de, double res) {
  std::ostringstream os;
  os << "ground state: no convergence after " << it << " iterations (dtau=" << dtau << ", last energy decrease per step=" << de
     << ", residual=" << res << ")";
  throw NumericalError(os.str());
}

inline GroundStateResult ground_state_split(const RealField& v, double g, const GroundStateOptions& o) {
  const Grid& grid = v.grid;
  const double dv = grid.cell_volume();
  SplitStep ss(grid);
  ComplexArray scratch;
  GroundStateResult res;
  res.state = o.initial_guess ? *o.initial_guess : default_guess(grid);
  require_same_grid(res.state, v, "ground_state");
  auto& phi = res.state.values;
  normalize_in_place(phi, dv);

  const int stride = std::max(1, o.energy_stride);
  double dtau = o.dtau_initial;
  double e_prev = energy_parts(ss, phi, v.values, scratch).energy(g);
  ComplexArray start, prev;
  double de = 0.0, resid = 0.0;
  while (res.iterations < o.max_iterations) {
    start.assign(phi.begin(), phi.end());
    for (int s = 0; s < stride; ++s) {
      if (s + 1 == stride) prev.assign(phi.begin(), phi.end());
      ss.imaginary_step(phi, v.values, g, dtau);
      normalize_in_place(phi, dv);
    }
    res.iterations += stride;
    const double e = energy_parts(ss, phi, v.values, scratch).energy(g);
    if (!std::isfinite(e)) throw NumericalError("ground state: non-finite energy");
    if (e > e_prev + 1e-13 * std::abs(e_prev) && dtau / 2 >= o.dtau_min) {
      phi.assign(start.begin(), start.end());
      dtau /= 2;
      ++res.rejected;
      continue;
    }
    de = (e_prev - e) / stride;
    resid = distance(phi, prev, dv) / dtau;
    e_prev = e;
    const bool final_level = dtau <= o.dtau_final * (1 + 1e-12);
    const bool level_done = final_level ? (de < o.energy_tol && resid < o.residual_tol)
                                        : resid < std::max(o.residual_tol, dtau * dtau);
    if (level_done) {
      if (final_level) {
        res.residual = resid;
        res.dtau = dtau;
        const auto parts = energy_parts(ss, phi, v.values, scratch);
        res.energy = parts.energy(g);
        res.mu = parts.chemical_potential(g);
        return res;
      }
      dtau = std::max(dtau / 2, o.dtau_final);
    }
  }
  not_converged(res.iterations, dtau, de, resid);
}

/// FD energy pieces: (1/2)<phi, -Lap phi>, <phi, V phi>, int |phi|^4.
inline EnergyParts fd_energy_parts(const Grid& grid, std::span<const cplx> phi, std::span<const double> v, ComplexArray& lap) {
  lap.resize(phi.size());
  fd_laplacian<cplx>(grid, phi, lap);
  const double dv = grid.cell_volume();
  EnergyParts e;
  e.kinetic = -0.5 * parallel_sum<double>(phi.size(), [&](std::size_t i) { return std::real(std::conj(phi[i]) * lap[i]); }) * dv;
  e.potential = parallel_sum<double>(phi.size(), [&](std::size_t i) { return v[i] * std::norm(phi[i]); }) * dv;
  e.interaction = parallel_sum<double>(phi.size(), [&](std::size_t i) {
                    const double r = std::norm(phi[i]);
                    return r * r;
                  }) * dv;
  return e;
}

inline GroundStateResult ground_state_fd_rk4(const RealField& v, double g, const GroundStateOptions& o) {
  const Grid& grid = v.grid;
  const double dv = grid.cell_volume();
  GroundStateResult res;
  res.state = o.initial_guess ? *o.initial_guess : default_guess(grid);
  require_same_grid(res.state, v, "ground_state");
  auto& phi = res.state.values;
  normalize_in_place(phi, dv);

  const std::size_t n = phi.size();
  RealArray diag(n);
  ComplexArray k1(n), k2(n), k3(n), k4(n), tmp(n), prev, lap;
  double vmax = 0.0;
  for (double x : v.values) vmax = std::max(vmax, x);
  double inv_h2 = 0.0;
  for (int a = 0; a < grid.rank(); ++a) inv_h2 += 1.0 / (grid.spacing(a) * grid.spacing(a));

  // Density is frozen over each step, so a fixed point is an exact
  // eigenvector of the discrete nonlinear Hamiltonian.
  auto rhs = [&](std::span<const cplx> x, std::span<cplx> out) {
    fd_laplacian<cplx>(grid, x, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * out[i] - diag[i] * x[i];
  };

  double e_prev = fd_energy_parts(grid, phi, v.values, lap).energy(g);
  double de = 0.0, resid = 0.0, dtau = 0.0;
  const int stride = std::max(1, o.energy_stride);
  while (res.iterations < o.max_iterations) {
    for (int s = 0; s < stride; ++s) {
      double rho_max = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double rho = std::norm(phi[i]);
        diag[i] = v.values[i] + g * rho;
        rho_max = std::max(rho_max, rho);
      }
      // RK4 stability: |dtau * lambda_max| below ~2.78.
      const double lam_max = 3.03 * inv_h2 + vmax + g * rho_max;
      dtau = std::min(o.dtau_initial, 2.0 / lam_max);
      if (s + 1 == stride) prev.assign(phi.begin(), phi.end());
      rhs(phi, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = phi[i] + 0.5 * dtau * k1[i];
      rhs(tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = phi[i] + 0.5 * dtau * k2[i];
      rhs(tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = phi[i] + dtau * k3[i];
      rhs(tmp, k4);
      for (std::size_t i = 0; i < n; ++i) phi[i] += dtau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      normalize_in_place(phi, dv);
    }
    res.iterations += stride;
    const double e = fd_energy_parts(grid, phi, v.values, lap).energy(g);
    if (!std::isfinite(e)) throw NumericalError("ground state (fd-rk4): non-finite energy");
    de = std::abs(e_prev - e) / stride;
    resid = distance(phi, prev, dv) / dtau;
    e_prev = e;
    if (de < o.energy_tol && resid < o.residual_tol) {
      const auto parts = fd_energy_parts(grid, phi, v.values, lap);
      res.energy = parts.energy(g);
      res.mu = parts.chemical_potential(g);
      res.residual = resid;
      res.dtau = dtau;
      return res;
    }
  }
  not_converged(res.iterations, dtau, de, resid);
}

}  // namespace detail

/// Ground state of -Lap/2 + V + g|phi|^2 by normalized imaginary-time flow.
inline GroundStateResult ground_state(const RealField& v, double g, const GroundStateOptions& opts = {}) {
  if (!(opts.energy_tol > 0.0) || !(opts.residual_tol > 0.0)) throw ConfigError("ground state: tolerances must be positive");
  if (!(opts.dtau_initial > 0.0) || !(opts.dtau_final > 0.0) || !(opts.dtau_min > 0.0))
    throw ConfigError("ground state: time steps must be positive");
  if (opts.integrator == GroundStateIntegrator::fd_rk4) return detail::ground_state_fd_rk4(v, g, opts);
  return detail::ground_state_split(v, g, opts);
}

inline GroundStateResult ground_state(const TrapModel& model, std::span<const double> lambda, double g, const Grid& grid,
                                      const GroundStateOptions& opts = {}) {
  return ground_state(eval_potential(model, lambda, grid), g, opts);
}

}  // namespace gpeopt
