#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/gpe/propagate.hpp"
#include "gpeopt/gpe/split_step.hpp"
#include "gpeopt/potentials/trap.hpp"

namespace gpeopt {

/// Everything the cost functional needs besides the control itself. The
/// time step is the control's dt.
struct Scenario {
  TrapModel model;
  ComplexField initial_state;
  ComplexField target_state;
  double g = 0.0;
  double gamma = 1e-6;
  JacobianMethod jacobian = JacobianMethod::analytic;

  const Grid& grid() const noexcept { return initial_state.grid; }
};

struct CostBreakdown {
  double infidelity_term = 0.0;  ///< (1 - |<psi_d, psi(T)>|^2) / 2
  double penalty_term = 0.0;     ///< (gamma/2) int |d lambda/dt|^2
  double total = 0.0;
  double gamma = 0.0;
  cplx overlap{};  ///< <psi_d, psi(T)>

  double infidelity() const noexcept { return 2.0 * infidelity_term; }
};

namespace detail {

inline PropagatorConfig config_for(const ControlCurve& lambda, const Scenario& s) {
  PropagatorConfig cfg;
  cfg.dt = lambda.dt();
  cfg.steps = lambda.steps();
  cfg.g = s.g;
  return cfg;
}

inline CostBreakdown assemble_cost(const ControlCurve& lambda, const Scenario& s, const ComplexField& psi_T) {
  CostBreakdown c;
  c.gamma = s.gamma;
  c.overlap = inner_product(s.target_state, psi_T);
  c.infidelity_term = 0.5 * std::max(0.0, 1.0 - std::norm(c.overlap));
  c.penalty_term = 0.5 * s.gamma * h1_inner_product(lambda, lambda);
  c.total = c.infidelity_term + c.penalty_term;
  return c;
}

/// Second difference of every component at every node; boundary nodes use
/// the one-sided second-order stencil (2f0 - 5f1 + 4f2 - f3)/dt^2.
inline ControlCurve second_difference(const ControlCurve& c) {
  ControlCurve d(c.horizon(), c.steps(), c.components());
  const int N = c.steps();
  const double h2 = c.dt() * c.dt();
  for (int j = 0; j < c.components(); ++j) {
    for (int n = 1; n < N; ++n) d(n, j) = (c(n - 1, j) - 2.0 * c(n, j) + c(n + 1, j)) / h2;
    if (N >= 3) {
      d(0, j) = (2.0 * c(0, j) - 5.0 * c(1, j) + 4.0 * c(2, j) - c(3, j)) / h2;
      d(N, j) = (2.0 * c(N, j) - 5.0 * c(N - 1, j) + 4.0 * c(N - 2, j) - c(N - 3, j)) / h2;
    } else {
      d(0, j) = d(1, j);
      d(N, j) = d(N - 1, j);
    }
  }
  return d;
}

struct Pair {
  double a = 0.0, b = 0.0;
  Pair& operator+=(const Pair& o) noexcept {
    a += o.a;
    b += o.b;
    return *this;
  }
};

/// Re<psi, (dV/d lambda_j) p> for every control component j.
inline std::array<double, 2> contract_jacobian(const TrapModel& model, std::span<const double> lambda, const Grid& grid,
                                               std::span<const cplx> psi, std::span<const cplx> p, JacobianMethod method) {
  const int m = model.components();
  const double dv = grid.cell_volume();
  Pair s;
  if (method == JacobianMethod::analytic) {
    s = parallel_sum<Pair>(psi.size(), [&](std::size_t i) {
      const Vec3 r = grid.position(i);
      double gr[2] = {0.0, 0.0};
      model.analytic_gradient(lambda, r[0], r[1], r[2], std::span<double>(gr, static_cast<std::size_t>(m)));
      const double w = std::real(std::conj(psi[i]) * p[i]);
      return Pair{gr[0] * w, gr[1] * w};
    });
  } else {
    std::array<std::vector<cplx>, 2> lc;
    std::array<std::vector<double>, 2> lp, lm;
    for (int j = 0; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      lc[ju].assign(lambda.begin(), lambda.end());
      lc[ju][ju] += cplx(0.0, complex_step_h);
      lp[ju].assign(lambda.begin(), lambda.end());
      lm[ju] = lp[ju];
      lp[ju][ju] += central_difference_h;
      lm[ju][ju] -= central_difference_h;
    }
    const bool cs = method == JacobianMethod::complex_step;
    s = parallel_sum<Pair>(psi.size(), [&](std::size_t i) {
      const Vec3 r = grid.position(i);
      double gr[2] = {0.0, 0.0};
      for (int j = 0; j < m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        gr[j] = cs ? model.value(std::span<const cplx>(lc[ju]), r[0], r[1], r[2]).imag() / complex_step_h
                   : (model.value(std::span<const double>(lp[ju]), r[0], r[1], r[2]) -
                      model.value(std::span<const double>(lm[ju]), r[0], r[1], r[2])) /
                         (2.0 * central_difference_h);
      }
      const double w = std::real(std::conj(psi[i]) * p[i]);
      return Pair{gr[0] * w, gr[1] * w};
    });
  }
  return {s.a * dv, s.b * dv};
}

/// One backward pointwise sub-step of the adjoint, i p' = (V + 2g|psi|^2) p + g psi^2 p*,
/// over tau along the forward phase trajectory psi(s) = exp(-i w s) psi_ref,
/// w = V + g|psi_ref|^2, where psi_ref is the state at the end of the sub-step.
/// In the frame p = exp(-i w s) q the coefficients are constant,
/// i q' = g rho q + g psi_ref^2 q*, and the generator is nilpotent
/// (L^2 = |d|^2 - c^2 = 0), so q(tau) = q + tau L q exactly.
/// If pre_phase is nonzero, psi_ref = exp(-i (V + g|psi|^2) pre_phase) psi.
inline void adjoint_phase_substep(std::span<cplx> p, std::span<const double> v, std::span<const cplx> psi, double g, double tau,
                                  double pre_phase) {
  parallel_for(p.size(), [&](std::size_t i) {
    const double rho = std::norm(psi[i]);
    const double w = v[i] + g * rho;
    cplx sq = psi[i] * psi[i];
    if (pre_phase != 0.0) sq *= std::polar(1.0, -2.0 * w * pre_phase);
    const cplx lq = cplx(0.0, -g) * (rho * p[i] + sq * std::conj(p[i]));
    p[i] = std::polar(1.0, -w * tau) * (p[i] + tau * lq);
  });
}

}  // namespace detail

/// Cost functional: forward solve plus the two terms.
inline CostBreakdown evaluate_cost(const ControlCurve& lambda, const Scenario& s) {
  const auto res = propagate(s.initial_state, s.model, lambda, detail::config_for(lambda, s));
  return detail::assemble_cost(lambda, s, res.state);
}

struct AdjointOptions {
  double reversibility_tol = 1e-8;
  bool record_adjoint_norm = false;
};

struct AdjointResult {
  ControlCurve source;  ///< r(t_n) at every node
  CostBreakdown cost;
  double reversibility_error = 0.0;  ///< ||psi(0) recomputed backward - psi0||
  std::vector<double> adjoint_norms;  ///< ||p(t_n)||, n = N..0, if requested
};

/// Source term r = gamma * lambda'' + Re<psi, (dV/d lambda) p> on the control's
/// time grid. The state is carried backward by inverse Strang steps next to
/// the adjoint, so only psi^n, psi^{n-1} and p^n are held.
inline AdjointResult adjoint_source(const ControlCurve& lambda, const Scenario& s, const AdjointOptions& opts = {}) {
  const Grid& grid = s.grid();
  require_same_grid(s.initial_state, s.target_state, "adjoint_source");
  const auto fwd = propagate(s.initial_state, s.model, lambda, detail::config_for(lambda, s));
  AdjointResult out;
  out.cost = detail::assemble_cost(lambda, s, fwd.state);
  out.source = detail::second_difference(lambda);
  for (double& x : out.source.samples()) x *= s.gamma;

  const int N = lambda.steps(), m = lambda.components();
  const double dt = lambda.dt();
  SplitStep ss(grid);
  ComplexArray psi = fwd.state.values;  // psi^n
  ComplexArray psi_prev(psi.size());
  ComplexArray p(psi.size());
  const cplx a = out.cost.overlap;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = cplx(0.0, 1.0) * a * s.target_state.values[i];

  auto add_source = [&](int n) {
    const auto jac = detail::contract_jacobian(s.model, lambda.node(n), grid, psi, p, s.jacobian);
    for (int j = 0; j < m; ++j) out.source(n, j) += jac[static_cast<std::size_t>(j)];
    if (opts.record_adjoint_norm) out.adjoint_norms.push_back(std::sqrt(norm_squared(p, grid.cell_volume())));
  };
  add_source(N);
  for (int n = N; n >= 1; --n) {
    const RealField v = eval_potential(s.model, lambda.midpoint(n - 1), grid);
    psi_prev = psi;
    ss.strang_step(psi_prev, v.values, s.g, -dt);
    // Mirror of the forward step: undo the closing phase (ends at psi^n),
    // the free flight, then the opening phase (ends at its image of psi^{n-1}).
    detail::adjoint_phase_substep(p, v.values, psi, s.g, -0.5 * dt, 0.0);
    ss.free_flight(p, -dt);
    detail::adjoint_phase_substep(p, v.values, psi_prev, s.g, -0.5 * dt, 0.5 * dt);
    std::swap(psi, psi_prev);
    if (!all_finite(std::span<const cplx>(p))) throw NumericalError("adjoint: non-finite adjoint state at step " + std::to_string(n - 1));
    add_source(n - 1);
  }
  const double dv = grid.cell_volume();
  double err = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) err += std::norm(psi[i] - s.initial_state.values[i]);
  out.reversibility_error = std::sqrt(err * dv);
  if (!(out.reversibility_error <= opts.reversibility_tol)) {
    std::ostringstream os;
    os << "adjoint: backward recomputation of psi(0) is off by " << out.reversibility_error << " in L2 (tolerance "
       << opts.reversibility_tol << ")";
    throw NumericalError(os.str());
  }
  return out;
}

/// Solves G'' = r per component with G(0) = G(T) = 0 (three-point second
/// difference, tridiagonal direct solve). Endpoints are exactly zero.
inline ControlCurve h1_gradient(const ControlCurve& r) {
  const int N = r.steps(), m = r.components();
  const double h2 = r.dt() * r.dt();
  ControlCurve G(r.horizon(), N, m);
  const int n = N - 1;
  std::vector<double> c(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  for (int j = 0; j < m; ++j) {
    // Constant tridiagonal (1, -2, 1)/h^2; Thomas elimination.
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = r(i + 1, j) * h2;
    double b = -2.0;
    c[0] = 1.0 / b;
    d[0] /= b;
    for (int i = 1; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      b = -2.0 - c[iu - 1];
      c[iu] = 1.0 / b;
      d[iu] = (d[iu] - d[iu - 1]) / b;
    }
    G(n, j) = d[static_cast<std::size_t>(n - 1)];
    for (int i = n - 2; i >= 0; --i) {
      const auto iu = static_cast<std::size_t>(i);
      G(i + 1, j) = d[iu] - c[iu] * G(i + 2, j);
    }
    G(0, j) = 0.0;
    G(N, j) = 0.0;
  }
  return G;
}

struct GradientResult {
  ControlCurve gradient;
  CostBreakdown cost;
  double reversibility_error = 0.0;
};

inline GradientResult cost_gradient(const ControlCurve& lambda, const Scenario& s) {
  auto src = adjoint_source(lambda, s);
  return {h1_gradient(src.source), src.cost, src.reversibility_error};
}

struct GradientCheck {
  double directional = 0.0;         ///< h1(grad J, dl)
  double finite_difference = 0.0;   ///< (J(l + eps dl) - J(l - eps dl)) / (2 eps)
  double relative_error = 0.0;
};

/// Compares the H1 gradient with a central difference of the cost along dl.
inline GradientCheck gradient_check(const ControlCurve& lambda, const ControlCurve& dl, double eps, const Scenario& s) {
  require_same_sampling(lambda, dl, "gradient_check");
  for (int j = 0; j < dl.components(); ++j)
    if (dl(0, j) != 0.0 || dl(dl.steps(), j) != 0.0) throw ShapeError("gradient_check: variation must vanish at the endpoints");
  GradientCheck c;
  const auto gr = cost_gradient(lambda, s);
  c.directional = h1_inner_product(gr.gradient, dl);
  const double jp = evaluate_cost(axpy(lambda, eps, dl), s).total;
  const double jm = evaluate_cost(axpy(lambda, -eps, dl), s).total;
  c.finite_difference = (jp - jm) / (2.0 * eps);
  c.relative_error = std::abs(c.directional - c.finite_difference) / std::max(std::abs(c.finite_difference), 1e-30);
  return c;
}

}  // namespace gpeopt
