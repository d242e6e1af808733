#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/optim/line_search.hpp"

namespace gpeopt {

enum class OptimizerMethod { steepest_descent, hz_nlcg };

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::hz_nlcg;
  int max_iters = 100;
  double cost_tol = 1e-8;  ///< relative cost decrease over cost_window iterations
  int cost_window = 5;
  double grad_tol = 1e-10;  ///< on the H1 norm of the gradient
  int restart_every = 0;    ///< force a steepest-descent direction every k iterations (0: never)
  LineSearchConfig ls;

  void validate() const {
    if (max_iters < 1) throw ConfigError("optimizer: max_iters must be at least 1");
    if (cost_window < 1) throw ConfigError("optimizer: cost_window must be at least 1");
    if (!(cost_tol >= 0.0) || !(grad_tol >= 0.0)) throw ConfigError("optimizer: tolerances must be non-negative");
    if (restart_every < 0) throw ConfigError("optimizer: restart_every must be non-negative");
    ls.validate();
  }

  bool operator==(const OptimizerConfig&) const = default;
};

/// Cost and gradient oracles. The gradient oracle returns the cost at the
/// same point as well.
struct Objective {
  std::function<CostBreakdown(const ControlCurve&)> cost;
  std::function<GradientResult(const ControlCurve&)> gradient;
};

inline Objective scenario_objective(const Scenario& s) {
  return {[&s](const ControlCurve& l) { return evaluate_cost(l, s); }, [&s](const ControlCurve& l) { return cost_gradient(l, s); }};
}

struct IterationRecord {
  int iteration = 0;
  CostBreakdown cost;
  double gradient_norm = 0.0;
  double step = 0.0;  ///< alpha of the step that produced this iterate
  int evaluations = 0;
  bool restarted = false;  ///< the step was taken along the negative gradient
  bool curvature_ok = true;  ///< phi'(alpha) >= sigma phi'(0) at the accepted step
};

using IterationLog = std::vector<IterationRecord>;

enum class OptimizerStatus { cost_converged, gradient_converged, max_iterations, line_search_failed };

inline const char* to_string(OptimizerStatus s) {
  switch (s) {
    case OptimizerStatus::cost_converged: return "cost-converged";
    case OptimizerStatus::gradient_converged: return "gradient-converged";
    case OptimizerStatus::max_iterations: return "max-iterations";
    default: return "line-search-failed";
  }
}

struct OptimizationResult {
  ControlCurve control;
  IterationLog log;
  OptimizerStatus status = OptimizerStatus::max_iterations;
  std::string message;

  const CostBreakdown& final_cost() const { return log.back().cost; }
  const CostBreakdown& initial_cost() const { return log.front().cost; }
};

namespace detail {

inline double max_abs(const ControlCurve& c) {
  double m = 0.0;
  for (double x : c.samples()) m = std::max(m, std::abs(x));
  return m;
}

inline ControlCurve negated(const ControlCurve& c) {
  ControlCurve d = c;
  for (double& x : d.samples()) x = -x;
  return d;
}

}  // namespace detail

/// First-order minimization in the H1_0 geometry. Directions are built from
/// H1 gradients (zero at both ends), so every iterate keeps lambda(0) and
/// lambda(T) bit-for-bit. hz-nlcg uses the Hager-Zhang beta with its lower
/// truncation and restarts along the negative gradient when the direction
/// fails the angle test or the curvature d.y is not positive.
inline OptimizationResult minimize(const ControlCurve& lambda0, const Objective& obj, const OptimizerConfig& cfg,
                                   const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  cfg.validate();
  OptimizationResult res;
  res.control = lambda0;
  GradientResult cur = obj.gradient(res.control);
  double gnorm = h1_norm(cur.gradient);
  res.log.push_back({0, cur.cost, gnorm, 0.0, 1, true});
  if (on_iteration) on_iteration(res.log.back());
  if (gnorm < cfg.grad_tol) {
    res.status = OptimizerStatus::gradient_converged;
    return res;
  }

  ControlCurve d = detail::negated(cur.gradient);
  bool restarted = true;
  double alpha_prev = 0.0, f_prev = std::nan("");
  for (int k = 1; k <= cfg.max_iters; ++k) {
    double dphi = h1_inner_product(cur.gradient, d);
    if (!(dphi < 0.0)) {
      d = detail::negated(cur.gradient);
      dphi = -gnorm * gnorm;
      restarted = true;
    }
    const double f0 = cur.cost.total;
    auto trial_step = [&] {
      double a0 = cfg.ls.first_max_step / std::max(detail::max_abs(d), 1e-300);
      if (k > 1) {
        const double q = 2.0 * (f0 - f_prev) / dphi;  // previous decrease, extrapolated
        a0 = (std::isfinite(q) && q > 0.0) ? q : alpha_prev;
        if (!(a0 > 0.0) || !std::isfinite(a0)) a0 = cfg.ls.first_max_step / std::max(detail::max_abs(d), 1e-300);
      }
      return a0;
    };
    auto phi = [&](double a) {
      try {
        return obj.cost(axpy(res.control, a, d)).total;
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    LineSearchResult ls = line_search(phi, f0, dphi, trial_step(), cfg.ls);
    if (!ls.success && !restarted) {
      d = detail::negated(cur.gradient);
      dphi = -gnorm * gnorm;
      restarted = true;
      const int spent = ls.evaluations;
      ls = line_search(phi, f0, dphi, cfg.ls.first_max_step / std::max(detail::max_abs(d), 1e-300), cfg.ls);
      ls.evaluations += spent;
    }
    if (!ls.success) {
      res.status = OptimizerStatus::line_search_failed;
      res.message = "line search found no decrease at iteration " + std::to_string(k) + "; returning the best iterate";
      return res;
    }

    ControlCurve next = axpy(res.control, ls.alpha, d);
    GradientResult nxt = obj.gradient(next);
    const double gnorm_new = h1_norm(nxt.gradient);
    const bool curvature_ok = h1_inner_product(nxt.gradient, d) >= cfg.ls.sigma * dphi;
    res.log.push_back({k, nxt.cost, gnorm_new, ls.alpha, ls.evaluations + 1, restarted, curvature_ok});
    if (on_iteration) on_iteration(res.log.back());

    // Direction update before the state is replaced.
    const ControlCurve y = axpy(nxt.gradient, -1.0, cur.gradient);
    const double dy = h1_inner_product(d, y);
    bool restart = cfg.method == OptimizerMethod::steepest_descent || !(dy > 0.0) ||
                   (cfg.restart_every > 0 && k % cfg.restart_every == 0);
    ControlCurve d_new;
    if (!restart) {
      const double yy = h1_inner_product(y, y), yg = h1_inner_product(y, nxt.gradient), dg = h1_inner_product(d, nxt.gradient);
      double beta = (yg - 2.0 * yy * dg / dy) / dy;
      const double eta = -1.0 / (h1_norm(d) * std::min(0.01, gnorm));
      beta = std::max(beta, eta);
      d_new = axpy(detail::negated(nxt.gradient), beta, d);
      const double angle = h1_inner_product(d_new, nxt.gradient);
      if (!(angle < -1e-4 * h1_norm(d_new) * gnorm_new)) restart = true;
    }
    if (restart) d_new = detail::negated(nxt.gradient);

    f_prev = f0;
    alpha_prev = ls.alpha;
    res.control = std::move(next);
    cur = std::move(nxt);
    gnorm = gnorm_new;
    d = std::move(d_new);
    restarted = restart;

    if (gnorm < cfg.grad_tol) {
      res.status = OptimizerStatus::gradient_converged;
      return res;
    }
    if (k >= cfg.cost_window) {
      const double old = res.log[static_cast<std::size_t>(k - cfg.cost_window)].cost.total;
      if ((old - cur.cost.total) < cfg.cost_tol * std::abs(old)) {
        res.status = OptimizerStatus::cost_converged;
        return res;
      }
    }
  }
  res.status = OptimizerStatus::max_iterations;
  return res;
}

inline OptimizationResult minimize(const ControlCurve& lambda0, const Scenario& s, const OptimizerConfig& cfg,
                                   const std::function<void(const IterationRecord&)>& on_iteration = {}) {
  return minimize(lambda0, scenario_objective(s), cfg, on_iteration);
}

/// One discretization level: grid points per axis and the time step.
struct Level {
  std::vector<int> points;
  double dt = 0.0;
};

struct LevelSchedule {
  std::vector<Level> levels;

  void validate() const {
    if (levels.empty()) throw ConfigError("level schedule: no levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(levels[i].dt > 0.0)) throw ConfigError("level schedule: dt must be positive at level " + std::to_string(i));
      if (i == 0) continue;
      const auto& a = levels[i - 1];
      const auto& b = levels[i];
      if (a.points.size() != b.points.size()) throw ConfigError("level schedule: rank changes at level " + std::to_string(i));
      for (std::size_t k = 0; k < a.points.size(); ++k)
        if (b.points[k] < a.points[k]) throw ConfigError("level schedule: grid coarsens at level " + std::to_string(i));
      if (b.dt > a.dt) throw ConfigError("level schedule: dt grows at level " + std::to_string(i));
    }
  }
};

/// Number of time steps for a level: round(T/dt), at least 2.
inline int steps_for(double horizon, double dt) { return std::max(2, static_cast<int>(std::lround(horizon / dt))); }

struct MultilevelResult {
  ControlCurve control;
  std::vector<OptimizationResult> levels;
  bool stopped_early = false;
};

/// Builds the scenario of one level (ground states etc.) on demand.
using ScenarioFactory = std::function<Scenario(const Level&, std::size_t index)>;

/// Coarse-to-fine optimization: each level starts from the previous optimum
/// resampled onto its time grid, and the sweep stops once a level changes the
/// control by less than change_tol (relative H1 norm).
inline MultilevelResult multilevel_optimize(const ControlCurve& lambda0, const ScenarioFactory& factory, const LevelSchedule& schedule,
                                            const OptimizerConfig& cfg, double change_tol = 1e-3,
                                            const std::function<void(std::size_t, const IterationRecord&)>& on_iteration = {}) {
  schedule.validate();
  MultilevelResult out;
  ControlCurve lambda = lambda0;
  for (std::size_t i = 0; i < schedule.levels.size(); ++i) {
    const Level& level = schedule.levels[i];
    const int N = steps_for(lambda0.horizon(), level.dt);
    ControlCurve start = N == lambda.steps() ? lambda : resample_control(lambda, N);
    try {
      const Scenario s = factory(level, i);
      auto cb = [&](const IterationRecord& r) {
        if (on_iteration) on_iteration(i, r);
      };
      out.levels.push_back(minimize(start, s, cfg, cb));
    } catch (const NumericalError& e) {
      throw NumericalError("level " + std::to_string(i) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("level " + std::to_string(i) + ": " + e.what());
    }
    lambda = out.levels.back().control;
    if (i > 0) {
      const double change = h1_norm(axpy(lambda, -1.0, start));
      if (change < change_tol * std::max(h1_norm(lambda), 1e-300)) {
        out.stopped_early = i + 1 < schedule.levels.size();
        break;
      }
    }
  }
  out.control = lambda;
  return out;
}

}  // namespace gpeopt
