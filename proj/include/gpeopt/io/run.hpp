#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/bdg/bdg.hpp"
#include "gpeopt/bdg/excitation.hpp"
#include "gpeopt/gpe/ground_state.hpp"
#include "gpeopt/gpe/observables.hpp"
#include "gpeopt/gpe/propagate.hpp"
#include "gpeopt/io/config.hpp"
#include "gpeopt/io/output.hpp"
#include "gpeopt/optim/optimizer.hpp"
#include "gpeopt/reduction/reduction1d.hpp"

namespace gpeopt {

inline constexpr int exit_ok = 0, exit_config = 1, exit_numerical = 2, exit_assertion = 3;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"groundstate", "propagate", "optimize", "bdg", "reduce1d", "extract"};
  return s;
}

struct RunOptions {
  std::optional<fs::path> out;        ///< overrides output.directory
  std::optional<int> level;           ///< 1-based schedule level to run alone
  std::optional<double> continue_ms;  ///< overrides time.continue_ms
  bool check = false;                 ///< --assert: failed checks give exit code 3
  std::ostream* log = nullptr;
};

struct RunOutcome {
  int exit_code = exit_ok;
  std::string message;
  nlohmann::ordered_json summary;
};

namespace detail {

using json = nlohmann::ordered_json;

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json cost_json(const CostBreakdown& c) {
  return {{"total", number(c.total)},
          {"infidelity_term", number(c.infidelity_term)},
          {"penalty_term", number(c.penalty_term)},
          {"infidelity", number(c.infidelity())},
          {"gamma", c.gamma}};
}

class RunContext {
 public:
  RunContext(const ScenarioConfig& cfg, const RunOptions& opts)
      : cfg_(cfg), opts_(opts), r_(resolve(cfg)), dir_(opts.out ? *opts.out : fs::path(cfg.output.directory)) {
    ensure_directory(dir_);
    if (opts.continue_ms) {
      if (!(*opts.continue_ms >= 0.0)) throw ConfigError("--continue-ms must be non-negative");
      r_.continue_time = r_.units.time_from_ms(*opts.continue_ms);
    }
    summary_["scenario"] = cfg.name;
    summary_["units"] = {{"g", r_.g}, {"t0_s", r_.units.t0()}, {"l0_m", r_.units.l0}, {"horizon", r_.horizon}};
  }

  const ScenarioConfig& cfg() const { return cfg_; }
  const ResolvedScenario& resolved() const { return r_; }
  const fs::path& dir() const { return dir_; }
  json& summary() { return summary_; }

  void log(const std::string& line) const {
    if (opts_.log) *opts_.log << line << std::endl;
  }

  /// Level used by single-level subcommands: --level if given, else the finest.
  Level level() const {
    const LevelSchedule s = schedule_of(cfg_, r_.units);
    if (opts_.level) {
      if (*opts_.level < 1 || *opts_.level > static_cast<int>(s.levels.size()))
        throw ConfigError("--level must be between 1 and " + std::to_string(s.levels.size()));
      return s.levels[static_cast<std::size_t>(*opts_.level - 1)];
    }
    return s.levels.back();
  }

  GroundStateResult ground_state_at(const std::vector<double>& lambda, const Grid& grid, double g) const {
    return ground_state(r_.model, lambda, g, grid, ground_state_options(cfg_.ground_state));
  }

  Scenario scenario(const Grid& grid) const {
    Scenario s;
    s.model = r_.model;
    s.g = r_.g;
    s.gamma = cfg_.control.gamma;
    s.jacobian = jacobian_from(cfg_.control.jacobian);
    s.initial_state = ground_state_at(cfg_.control.start, grid, r_.g).state;
    s.target_state = ground_state_at(cfg_.control.end, grid, r_.g).state;
    return s;
  }

  ControlCurve control(int steps) const {
    if (cfg_.control.file.empty()) return initial_control(cfg_.control, r_.horizon, steps);
    ControlCurve c = read_control_csv(cfg_.control.file, &r_.units);
    if (std::abs(c.horizon() - r_.horizon) > 1e-9 * r_.horizon) throw ConfigError("control file horizon differs from time.horizon_ms");
    return c.steps() == steps ? c : resample_control(c, steps);
  }

  SnapshotMeta meta(const std::string& kind, double t) const { return {kind, t, r_.units}; }

  void check(const std::string& name, double value, double limit, bool upper) {
    const bool pass = std::isfinite(value) && (upper ? value <= limit : value >= limit);
    summary_["assertions"].push_back({{"name", name}, {"value", number(value)}, {upper ? "max" : "min", limit}, {"pass", pass}});
    if (!pass) failed_.push_back(name);
  }
  const std::vector<std::string>& failed() const { return failed_; }

 private:
  const ScenarioConfig& cfg_;
  const RunOptions& opts_;
  ResolvedScenario r_;
  fs::path dir_;
  json summary_;
  std::vector<std::string> failed_;
};

struct Trajectory {
  ComplexField state_T;
  double infidelity_T = 0.0;
  double max_after_T = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> series;  ///< t_ms, infidelity, norm
};

/// Forward run to T with the given control, then a frozen-control
/// continuation; writes infidelity.csv and optional snapshots.
/// on_state sees psi(T) and then every recorded continuation state.
inline Trajectory run_trajectory(RunContext& ctx, const Scenario& s, const ControlCurve& lambda,
                                 const std::function<void(double, const ComplexField&)>& on_state = {}) {
  const auto& r = ctx.resolved();
  const auto& out = ctx.cfg().output;
  const double dt = lambda.dt();
  Trajectory tr;
  PropagatorConfig pc;
  pc.dt = dt;
  pc.steps = lambda.steps();
  pc.g = s.g;
  pc.record_stride = out.record_stride > 0 ? out.record_stride : lambda.steps();
  Observers obs;
  obs.norm = true;
  obs.reference = &s.target_state;
  if (out.snapshot_stride > 0)
    obs.snapshot = [&](int n, double t, const ComplexField& psi) {
      if (n % out.snapshot_stride == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%07d", n);
        write_snapshot(ctx.dir() / name, psi, ctx.meta("state", t));
      }
    };
  const auto fwd = propagate(s.initial_state, s.model, lambda, pc, obs);
  for (std::size_t k = 0; k < fwd.times.size(); ++k)
    tr.series.push_back({r.units.time_to_ms(fwd.times[k]), fwd.infidelities[k], fwd.norms[k]});
  tr.state_T = fwd.state;
  tr.infidelity_T = infidelity(fwd.state, s.target_state);
  write_snapshot(ctx.dir() / "state_T", fwd.state, ctx.meta("state", r.horizon));
  if (on_state) on_state(r.horizon, fwd.state);

  const int cont = r.continue_time > 0.0 ? std::max(2, static_cast<int>(std::lround(r.continue_time / dt))) : 0;
  if (cont > 0) {
    const std::vector<double> last(lambda.node(lambda.steps()).begin(), lambda.node(lambda.steps()).end());
    const ControlCurve frozen = ControlCurve::linear(cont * dt, cont, last, last);
    PropagatorConfig cc = pc;
    cc.steps = cont;
    Observers co = obs;
    co.snapshot = [&](int n, double t, const ComplexField& psi) {
      if (n == 0) return;
      const int global = lambda.steps() + n;
      if (out.snapshot_stride > 0 && global % out.snapshot_stride == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%07d", global);
        write_snapshot(ctx.dir() / name, psi, ctx.meta("state", r.horizon + t));
      }
      if (on_state) on_state(r.horizon + t, psi);
    };
    const auto after = propagate(fwd.state, s.model, frozen, cc, co);
    tr.max_after_T = 0.0;
    for (std::size_t k = 1; k < after.times.size(); ++k) {
      tr.series.push_back({r.units.time_to_ms(r.horizon + after.times[k]), after.infidelities[k], after.norms[k]});
      tr.max_after_T = std::max(tr.max_after_T, after.infidelities[k]);
    }
  }
  write_csv(ctx.dir() / "infidelity.csv", {"t_ms", "infidelity", "norm"}, tr.series);
  return tr;
}

inline void store_trajectory(RunContext& ctx, const Trajectory& tr) {
  ctx.summary()["infidelity_at_T"] = number(tr.infidelity_T);
  if (std::isfinite(tr.max_after_T)) ctx.summary()["max_infidelity_after_T"] = tr.max_after_T;
  const auto& a = ctx.cfg().checks;
  if (a.max_final_infidelity) ctx.check("infidelity_at_T", tr.infidelity_T, *a.max_final_infidelity, true);
  if (a.max_continuation_infidelity) ctx.check("max_infidelity_after_T", tr.max_after_T, *a.max_continuation_infidelity, true);
}

inline json ground_state_json(const GroundStateResult& g, const UnitSystem& u) {
  return {{"mu", g.mu}, {"energy", g.energy}, {"mu_h_hz", g.mu / (2.0 * std::numbers::pi * u.t0())},
          {"iterations", g.iterations}, {"residual", number(g.residual)}};
}

inline void cmd_groundstate(RunContext& ctx) {
  const Level lv = ctx.level();
  const Grid grid = ctx.resolved().grid(lv.points);
  const auto& c = ctx.cfg().control;
  const auto a = ctx.ground_state_at(c.start, grid, ctx.resolved().g);
  const auto b = ctx.ground_state_at(c.end, grid, ctx.resolved().g);
  write_snapshot(ctx.dir() / "initial", a.state, ctx.meta("ground-state", 0.0));
  write_snapshot(ctx.dir() / "target", b.state, ctx.meta("ground-state", ctx.resolved().horizon));
  ctx.summary()["initial"] = ground_state_json(a, ctx.resolved().units);
  ctx.summary()["target"] = ground_state_json(b, ctx.resolved().units);
  ctx.summary()["overlap_infidelity"] = infidelity(a.state, b.state);
}

inline void cmd_propagate(RunContext& ctx) {
  const Level lv = ctx.level();
  const Scenario s = ctx.scenario(ctx.resolved().grid(lv.points));
  const ControlCurve lambda = ctx.control(steps_for(ctx.resolved().horizon, lv.dt));
  write_control_csv(ctx.dir() / "control.csv", lambda, &ctx.resolved().units);
  const Trajectory tr = run_trajectory(ctx, s, lambda);
  ctx.summary()["cost"] = cost_json(detail::assemble_cost(lambda, s, tr.state_T));
  store_trajectory(ctx, tr);
}

inline void cmd_optimize(RunContext& ctx, const std::optional<int>& only_level) {
  const auto& r = ctx.resolved();
  LevelSchedule sched = schedule_of(ctx.cfg(), r.units);
  if (only_level) sched.levels = {ctx.level()};
  const ControlCurve lambda0 = ctx.control(steps_for(r.horizon, sched.levels.front().dt));
  write_control_csv(ctx.dir() / "control_initial.csv", lambda0, &r.units);

  std::vector<std::vector<double>> log_rows;
  Scenario last;
  auto factory = [&](const Level& lv, std::size_t i) {
    ctx.log("level " + std::to_string(i + 1) + ": ground states on " + std::to_string(lv.points[0]) + "... grid");
    last = ctx.scenario(r.grid(lv.points));
    return last;
  };
  auto on_iter = [&](std::size_t level, const IterationRecord& it) {
    log_rows.push_back({static_cast<double>(level + 1), static_cast<double>(it.iteration), it.cost.total, it.cost.infidelity(),
                        it.cost.penalty_term, it.gradient_norm, it.step, static_cast<double>(it.evaluations)});
    char line[160];
    std::snprintf(line, sizeof line, "level %zu iter %d cost %.6e infidelity %.3e |grad| %.3e evals %d", level + 1, it.iteration,
                  it.cost.total, it.cost.infidelity(), it.gradient_norm, it.evaluations);
    ctx.log(line);
  };
  const auto res = multilevel_optimize(lambda0, factory, sched, ctx.cfg().optimizer, ctx.cfg().level_change_tol, on_iter);
  write_csv(ctx.dir() / "cost_log.csv",
            {"level", "iteration", "cost", "infidelity", "penalty", "gradient_norm", "step", "evaluations"}, log_rows);
  write_control_csv(ctx.dir() / "control_optimized.csv", res.control, &r.units);

  const double j0 = res.levels.front().initial_cost().total, j1 = res.levels.back().final_cost().total;
  json levels = json::array();
  for (const auto& l : res.levels)
    levels.push_back({{"status", to_string(l.status)},
                      {"iterations", l.log.size() - 1},
                      {"initial", cost_json(l.initial_cost())},
                      {"final", cost_json(l.final_cost())}});
  ctx.summary()["levels"] = levels;
  ctx.summary()["stopped_early"] = res.stopped_early;
  ctx.summary()["initial_cost"] = cost_json(res.levels.front().initial_cost());
  ctx.summary()["final_cost"] = cost_json(res.levels.back().final_cost());
  ctx.summary()["cost_reduction_factor"] = number(j0 / j1);
  if (ctx.cfg().checks.min_cost_reduction) ctx.check("cost_reduction_factor", j0 / j1, *ctx.cfg().checks.min_cost_reduction, false);

  // Final-level trajectory with the optimized control, plus continuation.
  const Trajectory tr = run_trajectory(ctx, last, res.control);
  write_snapshot(ctx.dir() / "target", last.target_state, ctx.meta("ground-state", r.horizon));
  store_trajectory(ctx, tr);
}

inline std::vector<double> bdg_lambda(const ScenarioConfig& c) { return c.bdg.state == "initial" ? c.control.start : c.control.end; }

/// Stationary state on the finite-difference Hamiltonian the BdG operators
/// use: a spectral ground state refined by the FD-RK4 integrator.
inline GroundStateResult fd_stationary_state(const RunContext& ctx, const Grid& grid, const std::vector<double>& lambda) {
  const auto& r = ctx.resolved();
  GroundStateOptions o = ground_state_options(ctx.cfg().ground_state);
  o.integrator = GroundStateIntegrator::split_step;
  const auto coarse = ground_state(r.model, lambda, r.g, grid, o);
  o.integrator = GroundStateIntegrator::fd_rk4;
  o.initial_guess = coarse.state;
  return ground_state(r.model, lambda, r.g, grid, o);
}

inline void cmd_bdg(RunContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& r = ctx.resolved();
  if (!c.bdg.omega_min) throw ConfigError("bdg: bdg.omega_min (smallest trap frequency) is required");
  const Grid grid = r.grid(ctx.level().points);
  const auto lam = bdg_lambda(c);
  const auto gs = fd_stationary_state(ctx, grid, lam);
  const RealField v = eval_potential(r.model, lam, grid);
  BdgOptions o;
  o.modes = c.bdg.modes;
  o.omega_min = c.bdg.omega_min->dimensionless(r.units);
  o.residual_tol = c.bdg.residual_tol;
  o.eigs.tol = c.bdg.eig_tol;
  o.eigs.basis_size = c.bdg.basis_size;
  o.eigs.max_restarts = c.bdg.max_restarts;
  o.ilut_droptol = c.bdg.ilut_droptol;
  o.ilut_fill = c.bdg.ilut_fill;
  const auto res = solve_bdg(gs.state, v, gs.mu, r.g, o);

  std::vector<std::vector<double>> rows;
  json modes = json::array();
  double worst = 0.0;
  for (std::size_t k = 0; k < res.modes.size(); ++k) {
    const auto& m = res.modes[k];
    const double w_si = m.omega / r.units.t0();
    const double t_eff_ms = 1e3 * std::numbers::pi / w_si;
    rows.push_back({static_cast<double>(k + 1), m.omega, w_si, t_eff_ms, m.residual, m.norm});
    modes.push_back({{"omega", m.omega}, {"omega_rad_s", w_si}, {"t_eff_ms", t_eff_ms}, {"residual", m.residual}, {"norm", m.norm}});
    worst = std::max(worst, m.residual);
    write_snapshot(ctx.dir() / ("mode_" + std::to_string(k + 1) + "_u"), m.u, ctx.meta("bdg-u", 0.0));
    write_snapshot(ctx.dir() / ("mode_" + std::to_string(k + 1) + "_v"), m.v, ctx.meta("bdg-v", 0.0));
  }
  write_csv(ctx.dir() / "bdg_modes.csv", {"mode", "omega", "omega_rad_s", "t_eff_ms", "residual", "norm"}, rows);
  ctx.summary()["stationary_state"] = ground_state_json(gs, r.units);
  ctx.summary()["modes"] = modes;
  ctx.summary()["sigma"] = res.sigma;
  ctx.summary()["goldstone_discarded"] = res.discarded;
  ctx.summary()["restarts"] = res.restarts;
  ctx.summary()["inner_iterations"] = res.inner_iterations;
  if (c.checks.max_bdg_residual) ctx.check("max_bdg_residual", worst, *c.checks.max_bdg_residual, true);
}

inline void cmd_reduce1d(RunContext& ctx) {
  const auto& c = ctx.cfg();
  const auto& r = ctx.resolved();
  const Level lv = ctx.level();
  const Grid grid = r.grid(lv.points);
  if (grid.rank() != 3) throw ConfigError("reduce1d: needs a 3D grid");
  const auto gs3 = ctx.ground_state_at(c.control.start, grid, r.g);
  const Reduced1dModel red = reduce_model(r.model, gs3.state, r.g);
  const double hz_um = red.g1d_h_hz_um(r.units);
  ctx.summary()["g1d"] = red.g1d;
  ctx.summary()["g1d_h_hz_um"] = hz_um;
  if (c.checks.g1d_h_hz_um) ctx.check("g1d_relative_error", std::abs(hz_um / *c.checks.g1d_h_hz_um - 1.0), c.checks.g1d_rel_tol, true);

  const RealField v0 = red.potential(c.control.start), v1 = red.potential(c.control.end);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < v0.values.size(); ++i)
    rows.push_back({red.grid.position(i)[0] * r.units.l0 / constants::micrometre, v0.values[i], v1.values[i]});
  write_csv(ctx.dir() / "potential_1d.csv", {"x_um", "v_initial", "v_target"}, rows);

  Scenario s;
  s.model = red.model;
  s.g = red.g1d;
  s.gamma = c.control.gamma;
  s.jacobian = jacobian_from(c.control.jacobian);
  s.initial_state = ground_state(v0, red.g1d, ground_state_options(c.ground_state)).state;
  s.target_state = ground_state(v1, red.g1d, ground_state_options(c.ground_state)).state;
  write_snapshot(ctx.dir() / "initial_1d", s.initial_state, ctx.meta("ground-state", 0.0));
  write_snapshot(ctx.dir() / "target_1d", s.target_state, ctx.meta("ground-state", r.horizon));
  if (!c.reduce1d.optimize) return;

  const ControlCurve lambda0 = ctx.control(steps_for(r.horizon, lv.dt));
  const auto res = minimize(lambda0, s, c.optimizer, [&](const IterationRecord& it) {
    char line[128];
    std::snprintf(line, sizeof line, "1d iter %d cost %.6e infidelity %.3e", it.iteration, it.cost.total, it.cost.infidelity());
    ctx.log(line);
  });
  write_control_csv(ctx.dir() / "control_1d.csv", res.control, &r.units);
  ctx.summary()["optimization_1d"] = {{"status", to_string(res.status)},
                                      {"initial", cost_json(res.initial_cost())},
                                      {"final", cost_json(res.final_cost())}};
  if (c.checks.min_cost_reduction)
    ctx.check("cost_reduction_factor_1d", res.initial_cost().total / res.final_cost().total, *c.checks.min_cost_reduction, false);
}

inline void cmd_extract(RunContext& ctx) {
  const auto& r = ctx.resolved();
  if (!(r.continue_time > 0.0)) throw ConfigError("extract: needs a continuation (time.continue_ms or --continue-ms)");
  const Level lv = ctx.level();
  const Scenario s = ctx.scenario(r.grid(lv.points));
  const ControlCurve lambda = ctx.control(steps_for(r.horizon, lv.dt));
  const double mu = chemical_potential(s.target_state, eval_potential(r.model, ctx.cfg().control.end, s.grid()), s.g);

  // theta is fixed by psi(T), which the trajectory reports first.
  std::optional<ExtractionResult> head;
  std::vector<std::vector<double>> rows;
  const Trajectory tr = run_trajectory(ctx, s, lambda, [&](double t, const ComplexField& psi) {
    if (!head) head = extract_excitation({psi}, {t}, s.target_state, mu, r.horizon);
    const auto d = excitation_delta(psi, t, s.target_state, mu, r.horizon, head->theta);
    rows.push_back({r.units.time_to_ms(t), norm_squared(d.values, s.grid().cell_volume())});
  });
  if (!head) throw NumericalError("extract: no state recorded at T");
  write_csv(ctx.dir() / "delta_norm.csv", {"t_ms", "delta_norm2"}, rows);
  ctx.summary()["theta"] = head->theta;
  ctx.summary()["overlap_at_T"] = head->overlap;
  ctx.summary()["mu_target"] = mu;
  if (head->assumption_violated) ctx.summary()["warning"] = head->warning;
  store_trajectory(ctx, tr);
}

}  // namespace detail

/// Runs one pipeline and writes its artifacts plus summary.json into the
/// output directory. Errors map to exit codes 1 (configuration) and 2
/// (numerical failure); with opts.check a failed [assert] entry gives 3.
inline RunOutcome run_scenario(const ScenarioConfig& cfg, const std::string& subcommand, const RunOptions& opts = {}) {
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    detail::RunContext ctx(cfg, opts);
    ctx.summary()["subcommand"] = subcommand;
    if (subcommand == "groundstate") detail::cmd_groundstate(ctx);
    else if (subcommand == "propagate") detail::cmd_propagate(ctx);
    else if (subcommand == "optimize") detail::cmd_optimize(ctx, opts.level);
    else if (subcommand == "bdg") detail::cmd_bdg(ctx);
    else if (subcommand == "reduce1d") detail::cmd_reduce1d(ctx);
    else detail::cmd_extract(ctx);
    ctx.summary()["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!ctx.summary().contains("assertions")) ctx.summary()["assertions"] = nlohmann::ordered_json::array();
    write_json(ctx.dir() / "summary.json", ctx.summary());
    out.summary = ctx.summary();
    if (opts.check && !ctx.failed().empty()) {
      out.exit_code = exit_assertion;
      out.message = "assertion failed:";
      for (const auto& f : ctx.failed()) out.message += " " + f;
    }
  } catch (const ConfigError& e) {
    out.exit_code = exit_config;
    out.message = e.what();
  } catch (const ShapeError& e) {
    out.exit_code = exit_config;
    out.message = e.what();
  } catch (const NumericalError& e) {
    out.exit_code = exit_numerical;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = exit_numerical;
    out.message = e.what();
  }
  return out;
}

}  // namespace gpeopt
