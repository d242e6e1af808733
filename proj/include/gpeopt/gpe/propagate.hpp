#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/gpe/observables.hpp"
#include "gpeopt/gpe/split_step.hpp"
#include "gpeopt/potentials/trap.hpp"

namespace gpeopt {

struct PropagatorConfig {
  double dt = 1e-3;
  int steps = 0;
  double g = 0.0;
  int record_stride = 0;       ///< observers fire every this many steps (0: never)
  int continue_steps = 0;      ///< extra steps after T with lambda frozen at lambda(T)
};

/// What to record along the trajectory. Records are taken at step 0, every
/// record_stride steps, and at the last step.
struct Observers {
  bool norm = false;
  bool energy = false;
  const ComplexField* reference = nullptr;  ///< infidelity against this state
  std::function<void(int step, double t, const ComplexField& psi)> snapshot;
};

struct PropagationResult {
  ComplexField state;
  std::vector<int> steps;
  std::vector<double> times, norms, energies, infidelities;
};

namespace detail {

inline void validate(const PropagatorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("propagate: dt must be positive");
  if (cfg.steps < 0 || cfg.continue_steps < 0) throw ConfigError("propagate: step counts must be non-negative");
  if (!(cfg.g >= 0.0)) throw ConfigError("propagate: g must be non-negative");
}

inline std::vector<double> control_at(const ControlCurve& c, int n) {
  const int k = std::min(n, c.steps());
  return {c.node(k).begin(), c.node(k).end()};
}

inline std::vector<double> midpoint_at(const ControlCurve& c, int n) {
  if (n >= c.steps()) return control_at(c, c.steps());
  return c.midpoint(n);
}

}  // namespace detail

/// Real-time propagation of psi0 under V(lambda(t)) for cfg.steps steps of
/// cfg.dt, then cfg.continue_steps more steps with lambda frozen at lambda(T).
///
/// Consecutive half-step phases of neighbouring steps are merged into one
/// pass (the modulus is unchanged by a phase rotation, so this is the same
/// scheme); they are kept separate at record points so recorded states are
/// full-step states.
inline PropagationResult propagate(const ComplexField& psi0, const TrapModel& model, const ControlCurve& lambda,
                                   const PropagatorConfig& cfg, const Observers& obs = {}) {
  detail::validate(cfg);
  if (lambda.steps() != cfg.steps) throw ShapeError("propagate: control has " + std::to_string(lambda.steps()) + " steps, config " +
                                                    std::to_string(cfg.steps));
  if (std::abs(lambda.horizon() - cfg.steps * cfg.dt) > 1e-9 * lambda.horizon())
    throw ShapeError("propagate: control horizon does not equal steps*dt");
  check_lambda(model, static_cast<std::size_t>(lambda.components()));

  const Grid& grid = psi0.grid;
  SplitStep ss(grid);
  PropagationResult res;
  res.state = psi0;
  auto& psi = res.state.values;
  const int total = cfg.steps + cfg.continue_steps;
  ComplexArray scratch;

  auto record = [&](int n) {
    const double t = n * cfg.dt;
    res.steps.push_back(n);
    res.times.push_back(t);
    if (obs.norm) res.norms.push_back(norm(res.state));
    if (obs.energy) {
      const auto l = detail::control_at(lambda, n);
      const RealField v = eval_potential(model, l, grid);
      res.energies.push_back(energy_parts(ss, psi, v.values, scratch).energy(cfg.g));
    }
    if (obs.reference) res.infidelities.push_back(infidelity(res.state, *obs.reference));
    if (obs.snapshot) obs.snapshot(n, t, res.state);
  };
  auto is_record = [&](int n) { return cfg.record_stride > 0 && (n % cfg.record_stride == 0 || n == total); };

  if (is_record(0)) record(0);
  if (total == 0) return res;

  auto potential = [&](int n) { return eval_potential(model, detail::midpoint_at(lambda, n), grid); };
  RealField v_cur = potential(0), v_next;
  bool open = false;  // first half phase of the current step already applied
  for (int n = 0; n < total; ++n) {
    if (!open) SplitStep::phase(psi, v_cur.values, 1.0, {}, 0.0, cfg.g, 0.5 * cfg.dt);
    ss.free_flight(psi, cfg.dt);
    const bool last = n + 1 == total;
    if (!last) {
      // Frozen continuation reuses the potential.
      if (n + 1 >= cfg.steps && n >= cfg.steps) v_next = v_cur;
      else v_next = potential(n + 1);
    }
    if (!last && !is_record(n + 1)) {
      SplitStep::phase(psi, v_cur.values, 0.5, v_next.values, 0.5, cfg.g, cfg.dt);
      open = true;
    } else {
      SplitStep::phase(psi, v_cur.values, 1.0, {}, 0.0, cfg.g, 0.5 * cfg.dt);
      open = false;
    }
    if (!all_finite(std::span<const cplx>(psi)))
      throw NumericalError("propagate: non-finite wave function at step " + std::to_string(n + 1));
    if (!last) std::swap(v_cur, v_next);
    if (is_record(n + 1)) record(n + 1);
  }
  return res;
}

/// Propagation under a fixed potential field (no control dependence).
inline ComplexField propagate_static(const ComplexField& psi0, const RealField& v, double g, double dt, int steps) {
  require_same_grid(psi0, v, "propagate_static");
  SplitStep ss(psi0.grid);
  ComplexField psi = psi0;
  if (steps == 0) return psi;
  SplitStep::phase(psi.values, v.values, 1.0, {}, 0.0, g, 0.5 * dt);
  for (int n = 0; n < steps; ++n) {
    ss.free_flight(psi.values, dt);
    SplitStep::phase(psi.values, v.values, 1.0, {}, 0.0, g, n + 1 == steps ? 0.5 * dt : dt);
  }
  if (!all_finite(std::span<const cplx>(psi.values))) throw NumericalError("propagate_static: non-finite wave function");
  return psi;
}

}  // namespace gpeopt
