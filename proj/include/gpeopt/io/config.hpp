#pragma once

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/grid.hpp"
#include "gpeopt/gpe/ground_state.hpp"
#include "gpeopt/io/units.hpp"
#include "gpeopt/optim/optimizer.hpp"
#include "gpeopt/potentials/saturation.hpp"
#include "gpeopt/potentials/trap.hpp"

namespace gpeopt {

/// A physical frequency as written in a config file. With angular = true the
/// number is an angular frequency (rad/s times the unit prefix), otherwise an
/// ordinary frequency. Energies such as h x 30 kHz use the same type.
struct FrequencyValue {
  double value = 0.0;
  std::string unit = "Hz";
  bool angular = false;

  static double unit_scale(const std::string& unit) {
    if (unit == "Hz") return 1.0;
    if (unit == "kHz") return 1e3;
    if (unit == "MHz") return 1e6;
    throw ConfigError("frequency unit must be Hz, kHz or MHz, got '" + unit + "'");
  }
  /// Angular frequency in rad/s.
  double angular_si() const { return value * unit_scale(unit) * (angular ? 1.0 : 2.0 * std::numbers::pi); }
  double dimensionless(const UnitSystem& u) const { return u.angular(angular_si()); }

  bool operator==(const FrequencyValue&) const = default;
};

struct TrapConfig {
  std::string variant;  ///< harmonic-2p, toroidal-2p, rf-split-1p, rf-split-2p
  std::map<std::string, FrequencyValue> frequencies;
  std::map<std::string, double> scalars;  ///< lengths carry an _um suffix
  std::string coupling = "projected";
  std::vector<std::pair<double, double>> saturation = SaturationCurve::default_knots();

  bool operator==(const TrapConfig&) const = default;
};

struct LevelConfig {
  std::vector<int> points;
  double dt_ms = 0.0;
  bool operator==(const LevelConfig&) const = default;
};

struct ControlConfig {
  std::vector<double> start, end;
  /// lambda_j(t) = start_j + (end_j - start_j) t/T + sine_amplitude_j sin(pi t/T)
  std::vector<double> sine_amplitude;
  std::string file;  ///< CSV control to load instead of the formula (empty: unused)
  double gamma = 1e-6;
  std::string jacobian = "analytic";
  bool operator==(const ControlConfig&) const = default;
};

struct GroundStateConfig {
  std::string integrator = "split-step";
  double residual_tol = 1e-8;
  double energy_tol = 1e-10;
  double dtau_initial = 1e-2;
  double dtau_final = 1e-3;
  int energy_stride = 1;
  long max_iterations = 400000;
  bool operator==(const GroundStateConfig&) const = default;
};

struct BdgConfig {
  int modes = 3;
  std::string state = "target";  ///< "initial" or "target": which stationary state to analyse
  std::optional<FrequencyValue> omega_min;
  double residual_tol = 1e-6;
  double eig_tol = 1e-12;
  int basis_size = 0;
  int max_restarts = 300;
  double ilut_droptol = 1e-6;
  int ilut_fill = 10;
  bool operator==(const BdgConfig&) const = default;
};

struct Reduce1dConfig {
  bool optimize = false;  ///< run the optimizer on the reduced model as well
  bool operator==(const Reduce1dConfig&) const = default;
};

/// Checks applied by --assert; absent entries are not checked.
struct AssertConfig {
  std::optional<double> min_cost_reduction;
  std::optional<double> max_final_infidelity;
  std::optional<double> max_continuation_infidelity;
  std::optional<double> max_bdg_residual;
  std::optional<double> g1d_h_hz_um;
  double g1d_rel_tol = 5e-3;
  bool operator==(const AssertConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  int record_stride = 10;    ///< steps between scalar time-series samples
  int snapshot_stride = 0;   ///< steps between field snapshots (0: final state only)
  bool operator==(const OutputConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  double atoms = 0.0;
  double scattering_length_nm = 5.24;
  double mass_kg = constants::mass_rb87;
  double length_unit_um = 1.0;
  TrapConfig trap;
  std::vector<int> points;
  std::vector<double> half_lengths_um;
  double horizon_ms = 0.0;
  double dt_ms = 0.0;
  double continue_ms = 0.0;
  std::optional<double> t_star_ms;
  ControlConfig control;
  OptimizerConfig optimizer;
  double level_change_tol = 1e-3;
  std::vector<LevelConfig> levels;
  GroundStateConfig ground_state;
  BdgConfig bdg;
  Reduce1dConfig reduce1d;
  AssertConfig checks;
  OutputConfig output;

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

/// Reads keys of one TOML table and remembers which were used, so leftovers
/// can be reported with their full path.
class TableReader {
 public:
  TableReader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  std::string key_path(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }
  bool has(std::string_view k) const { return t_.contains(k); }

  const toml::node* node(std::string_view k) {
    used_.insert(std::string(k));
    return t_.get(k);
  }

  template <class T>
  std::optional<T> get(std::string_view k) {
    const toml::node* n = node(k);
    if (!n) return std::nullopt;
    return convert<T>(*n, key_path(k));
  }

  template <class T>
  T require(std::string_view k) {
    auto v = get<T>(k);
    if (!v) throw ConfigError("config: missing required key '" + key_path(k) + "'");
    return *v;
  }

  template <class T>
  void read(std::string_view k, T& out) {
    if (auto v = get<T>(k)) out = *v;
  }

  std::optional<TableReader> table(std::string_view k) {
    const toml::node* n = node(k);
    if (!n) return std::nullopt;
    if (!n->is_table()) throw ConfigError("config: '" + key_path(k) + "' must be a table");
    return TableReader(*n->as_table(), key_path(k));
  }

  const toml::array* array(std::string_view k) {
    const toml::node* n = node(k);
    if (!n) return nullptr;
    if (!n->is_array()) throw ConfigError("config: '" + key_path(k) + "' must be an array");
    return n->as_array();
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : t_) out.emplace_back(k.str());
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : t_)
      if (!used_.count(std::string(k.str()))) throw ConfigError("config: unknown key '" + key_path(k.str()) + "'");
  }

  template <class T>
  static T convert(const toml::node& n, const std::string& where) {
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n.value_exact<double>()) return *v;
      if (auto v = n.value_exact<int64_t>()) return static_cast<double>(*v);
      throw ConfigError("config: '" + where + "' must be a number");
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long>) {
      auto v = n.value_exact<int64_t>();
      if (!v) throw ConfigError("config: '" + where + "' must be an integer");
      return static_cast<T>(*v);
    } else if constexpr (std::is_same_v<T, bool>) {
      auto v = n.value_exact<bool>();
      if (!v) throw ConfigError("config: '" + where + "' must be true or false");
      return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      auto v = n.value_exact<std::string>();
      if (!v) throw ConfigError("config: '" + where + "' must be a string");
      return *v;
    } else if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<int>>) {
      const auto* a = n.as_array();
      if (!a) throw ConfigError("config: '" + where + "' must be an array");
      T out;
      for (std::size_t i = 0; i < a->size(); ++i)
        out.push_back(convert<typename T::value_type>(*a->get(i), where + "[" + std::to_string(i) + "]"));
      return out;
    } else if constexpr (std::is_same_v<T, FrequencyValue>) {
      const auto* t = n.as_table();
      if (!t) throw ConfigError("config: '" + where + "' must be a table {value, unit, angular}");
      TableReader r(*t, where);
      FrequencyValue f;
      f.value = r.require<double>("value");
      f.unit = r.require<std::string>("unit");
      f.angular = r.require<bool>("angular");
      r.finish();
      FrequencyValue::unit_scale(f.unit);
      return f;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

 private:
  const toml::table& t_;
  std::string path_;
  std::set<std::string> used_;
};

struct VariantKeys {
  std::vector<std::string> frequencies, scalars;
  bool saturation = false, coupling = false;
};

inline VariantKeys variant_keys(const std::string& v) {
  if (v == "harmonic-2p") return {{"wx_i", "wx_f", "wy_i", "wy_f", "wz"}, {}, false, false};
  if (v == "toroidal-2p") return {{"wx_i", "wx_f", "wy", "wz", "v0_star"}, {"w0_um"}, true, false};
  if (v == "rf-split-1p" || v == "rf-split-2p")
    return {{"omega0", "omega_perp", "omega_par", "detuning0", "rabi_star"}, {"g_F", "m_F", "m_tilde"}, true, true};
  throw ConfigError("config: trap.variant must be harmonic-2p, toroidal-2p, rf-split-1p or rf-split-2p, got '" + v + "'");
}

inline TrapConfig read_trap(TableReader r) {
  TrapConfig t;
  t.variant = r.require<std::string>("variant");
  const VariantKeys keys = variant_keys(t.variant);
  for (const auto& k : keys.frequencies) t.frequencies[k] = r.require<FrequencyValue>(k);
  for (const auto& k : keys.scalars) {
    if (k == "w0_um") t.scalars[k] = r.require<double>(k);
    else if (auto v = r.get<double>(k)) t.scalars[k] = *v;
  }
  if (keys.coupling) r.read("coupling", t.coupling);
  if (keys.saturation) {
    if (const toml::array* a = r.array("saturation")) {
      t.saturation.clear();
      for (std::size_t i = 0; i < a->size(); ++i) {
        const auto p = TableReader::convert<std::vector<double>>(*a->get(i), r.key_path("saturation") + "[" + std::to_string(i) + "]");
        if (p.size() != 2) throw ConfigError("config: trap.saturation entries must be [s, chi] pairs");
        t.saturation.emplace_back(p[0], p[1]);
      }
    }
  }
  r.finish();
  return t;
}

inline OptimizerMethod method_from(const std::string& s) {
  if (s == "hz-nlcg") return OptimizerMethod::hz_nlcg;
  if (s == "steepest-descent") return OptimizerMethod::steepest_descent;
  throw ConfigError("config: optimizer.method must be hz-nlcg or steepest-descent, got '" + s + "'");
}

inline std::string method_name(OptimizerMethod m) { return m == OptimizerMethod::hz_nlcg ? "hz-nlcg" : "steepest-descent"; }

inline JacobianMethod jacobian_from(const std::string& s) {
  if (s == "analytic") return JacobianMethod::analytic;
  if (s == "complex-step") return JacobianMethod::complex_step;
  if (s == "central-difference") return JacobianMethod::central_difference;
  throw ConfigError("config: control.jacobian must be analytic, complex-step or central-difference, got '" + s + "'");
}

inline void validate(const ScenarioConfig& c) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config: ") + what + " must be positive");
  };
  if (!(c.atoms >= 0.0)) throw ConfigError("config: physics.atoms must be non-negative");
  positive(c.scattering_length_nm, "physics.scattering_length_nm");
  positive(c.mass_kg, "physics.mass_kg");
  positive(c.length_unit_um, "physics.length_unit_um");
  positive(c.horizon_ms, "time.horizon_ms");
  positive(c.dt_ms, "time.dt_ms");
  if (!(c.continue_ms >= 0.0)) throw ConfigError("config: time.continue_ms must be non-negative");
  if (c.points.size() != c.half_lengths_um.size()) throw ConfigError("config: grid.points and grid.half_lengths_um differ in length");
  for (const auto& [k, f] : c.trap.frequencies)
    if (!(f.value > 0.0) && k != "detuning0" && k != "v0_star") throw ConfigError("config: trap." + k + " must be positive");
  const std::size_t m = c.trap.variant == "harmonic-2p" || c.trap.variant == "toroidal-2p" || c.trap.variant == "rf-split-2p" ? 2 : 1;
  if (c.control.start.size() != m || c.control.end.size() != m)
    throw ConfigError("config: control.start/end need " + std::to_string(m) + " components for " + c.trap.variant);
  if (!c.control.sine_amplitude.empty() && c.control.sine_amplitude.size() != m)
    throw ConfigError("config: control.sine_amplitude needs " + std::to_string(m) + " components");
  if (!(c.control.gamma >= 0.0)) throw ConfigError("config: control.gamma must be non-negative");
  jacobian_from(c.control.jacobian);
  if (c.ground_state.integrator != "split-step" && c.ground_state.integrator != "fd-rk4")
    throw ConfigError("config: ground_state.integrator must be split-step or fd-rk4");
  if (c.bdg.state != "initial" && c.bdg.state != "target") throw ConfigError("config: bdg.state must be initial or target");
  if (c.output.record_stride < 0 || c.output.snapshot_stride < 0) throw ConfigError("config: output strides must be non-negative");
  c.optimizer.validate();
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i].points.size() != c.points.size())
      throw ConfigError("config: levels[" + std::to_string(i) + "].points has the wrong rank");
    positive(c.levels[i].dt_ms, "levels.dt_ms");
  }
  (void)Grid(c.points, c.half_lengths_um);
}

}  // namespace detail

/// Parses TOML text. Defaults are filled, unknown keys rejected, values validated.
/// Parses TOML text. Defaults are filled, unknown keys rejected, values validated.
inline ScenarioConfig parse_config_string(const std::string& text, const std::string& source = "config") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }
  using detail::TableReader;
  TableReader top(root, "");
  ScenarioConfig c;
  top.read("name", c.name);

  auto required_table = [&](const char* k) {
    auto t = top.table(k);
    if (!t) throw ConfigError(std::string("config: missing required table [") + k + "]");
    return std::move(*t);
  };

  {
    auto r = required_table("physics");
    c.atoms = r.require<double>("atoms");
    r.read("scattering_length_nm", c.scattering_length_nm);
    r.read("mass_kg", c.mass_kg);
    r.read("length_unit_um", c.length_unit_um);
    r.finish();
  }
  c.trap = detail::read_trap(required_table("trap"));
  {
    auto r = required_table("grid");
    c.points = r.require<std::vector<int>>("points");
    c.half_lengths_um = r.require<std::vector<double>>("half_lengths_um");
    r.finish();
  }
  {
    auto r = required_table("time");
    c.horizon_ms = r.require<double>("horizon_ms");
    c.dt_ms = r.require<double>("dt_ms");
    r.read("continue_ms", c.continue_ms);
    c.t_star_ms = r.get<double>("t_star_ms");
    r.finish();
  }
  {
    auto r = required_table("control");
    c.control.start = r.require<std::vector<double>>("start");
    c.control.end = r.require<std::vector<double>>("end");
    r.read("sine_amplitude", c.control.sine_amplitude);
    r.read("file", c.control.file);
    r.read("gamma", c.control.gamma);
    r.read("jacobian", c.control.jacobian);
    r.finish();
  }
  if (auto r = top.table("optimizer")) {
    auto& o = c.optimizer;
    if (auto m = r->get<std::string>("method")) o.method = detail::method_from(*m);
    r->read("max_iters", o.max_iters);
    r->read("cost_tol", o.cost_tol);
    r->read("cost_window", o.cost_window);
    r->read("grad_tol", o.grad_tol);
    r->read("restart_every", o.restart_every);
    r->read("level_change_tol", c.level_change_tol);
    if (auto l = r->table("line_search")) {
      l->read("first_max_step", o.ls.first_max_step);
      l->read("delta", o.ls.delta);
      l->read("sigma", o.ls.sigma);
      l->read("max_evaluations", o.ls.max_evaluations);
      l->read("max_expansions", o.ls.max_expansions);
      l->read("expansion", o.ls.expansion);
      l->finish();
    }
    r->finish();
  }
  if (const toml::array* lv = top.array("levels")) {
    for (std::size_t i = 0; i < lv->size(); ++i) {
      const auto* t = lv->get(i)->as_table();
      if (!t) throw ConfigError("config: levels entries must be tables");
      TableReader r(*t, "levels[" + std::to_string(i) + "]");
      c.levels.push_back({r.require<std::vector<int>>("points"), r.require<double>("dt_ms")});
      r.finish();
    }
  }
  if (auto r = top.table("ground_state")) {
    auto& g = c.ground_state;
    r->read("integrator", g.integrator);
    r->read("residual_tol", g.residual_tol);
    r->read("energy_tol", g.energy_tol);
    r->read("dtau_initial", g.dtau_initial);
    r->read("dtau_final", g.dtau_final);
    r->read("energy_stride", g.energy_stride);
    r->read("max_iterations", g.max_iterations);
    r->finish();
  }
  if (auto r = top.table("bdg")) {
    auto& b = c.bdg;
    r->read("modes", b.modes);
    r->read("state", b.state);
    b.omega_min = r->get<FrequencyValue>("omega_min");
    r->read("residual_tol", b.residual_tol);
    r->read("eig_tol", b.eig_tol);
    r->read("basis_size", b.basis_size);
    r->read("max_restarts", b.max_restarts);
    r->read("ilut_droptol", b.ilut_droptol);
    r->read("ilut_fill", b.ilut_fill);
    r->finish();
  }
  if (auto r = top.table("reduce1d")) {
    r->read("optimize", c.reduce1d.optimize);
    r->finish();
  }
  if (auto r = top.table("assert")) {
    auto& a = c.checks;
    a.min_cost_reduction = r->get<double>("min_cost_reduction");
    a.max_final_infidelity = r->get<double>("max_final_infidelity");
    a.max_continuation_infidelity = r->get<double>("max_continuation_infidelity");
    a.max_bdg_residual = r->get<double>("max_bdg_residual");
    a.g1d_h_hz_um = r->get<double>("g1d_h_hz_um");
    r->read("g1d_rel_tol", a.g1d_rel_tol);
    r->finish();
  }
  if (auto r = top.table("output")) {
    r->read("directory", c.output.directory);
    r->read("record_stride", c.output.record_stride);
    r->read("snapshot_stride", c.output.snapshot_stride);
    r->finish();
  }
  top.finish();
  detail::validate(c);
  return c;
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.string());
}

namespace detail {

inline toml::array to_array(const std::vector<double>& v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}
inline toml::array to_array(const std::vector<int>& v) {
  toml::array a;
  for (int x : v) a.push_back(static_cast<int64_t>(x));
  return a;
}
inline toml::table to_table(const FrequencyValue& f) {
  toml::table t{{"value", f.value}, {"unit", f.unit}, {"angular", f.angular}};
  t.is_inline(true);
  return t;
}

}  // namespace detail

/// TOML text with every field written out; parse_config_string inverts it exactly.
inline std::string serialize_config(const ScenarioConfig& c) {
  using detail::to_array;
  using detail::to_table;
  toml::table root;
  root.insert("name", c.name);
  root.insert("physics", toml::table{{"atoms", c.atoms},
                                     {"scattering_length_nm", c.scattering_length_nm},
                                     {"mass_kg", c.mass_kg},
                                     {"length_unit_um", c.length_unit_um}});
  toml::table trap{{"variant", c.trap.variant}};
  for (const auto& [k, f] : c.trap.frequencies) trap.insert(k, to_table(f));
  for (const auto& [k, v] : c.trap.scalars) trap.insert(k, v);
  const auto keys = detail::variant_keys(c.trap.variant);
  if (keys.coupling) trap.insert("coupling", c.trap.coupling);
  if (keys.saturation) {
    toml::array knots;
    for (const auto& [s, v] : c.trap.saturation) knots.push_back(toml::array{s, v});
    trap.insert("saturation", knots);
  }
  root.insert("trap", trap);
  root.insert("grid", toml::table{{"points", to_array(c.points)}, {"half_lengths_um", to_array(c.half_lengths_um)}});
  toml::table time{{"horizon_ms", c.horizon_ms}, {"dt_ms", c.dt_ms}, {"continue_ms", c.continue_ms}};
  if (c.t_star_ms) time.insert("t_star_ms", *c.t_star_ms);
  root.insert("time", time);
  toml::table control{{"start", to_array(c.control.start)},
                      {"end", to_array(c.control.end)},
                      {"sine_amplitude", to_array(c.control.sine_amplitude)},
                      {"file", c.control.file},
                      {"gamma", c.control.gamma},
                      {"jacobian", c.control.jacobian}};
  root.insert("control", control);
  const auto& o = c.optimizer;
  toml::table ls{{"first_max_step", o.ls.first_max_step}, {"delta", o.ls.delta},
                 {"sigma", o.ls.sigma},                   {"max_evaluations", static_cast<int64_t>(o.ls.max_evaluations)},
                 {"max_expansions", static_cast<int64_t>(o.ls.max_expansions)}, {"expansion", o.ls.expansion}};
  root.insert("optimizer", toml::table{{"method", detail::method_name(o.method)},
                                       {"max_iters", static_cast<int64_t>(o.max_iters)},
                                       {"cost_tol", o.cost_tol},
                                       {"cost_window", static_cast<int64_t>(o.cost_window)},
                                       {"grad_tol", o.grad_tol},
                                       {"restart_every", static_cast<int64_t>(o.restart_every)},
                                       {"level_change_tol", c.level_change_tol},
                                       {"line_search", ls}});
  if (!c.levels.empty()) {
    toml::array levels;
    for (const auto& l : c.levels) levels.push_back(toml::table{{"points", to_array(l.points)}, {"dt_ms", l.dt_ms}});
    root.insert("levels", levels);
  }
  const auto& g = c.ground_state;
  root.insert("ground_state", toml::table{{"integrator", g.integrator},
                                          {"residual_tol", g.residual_tol},
                                          {"energy_tol", g.energy_tol},
                                          {"dtau_initial", g.dtau_initial},
                                          {"dtau_final", g.dtau_final},
                                          {"energy_stride", static_cast<int64_t>(g.energy_stride)},
                                          {"max_iterations", static_cast<int64_t>(g.max_iterations)}});
  const auto& b = c.bdg;
  toml::table bdg{{"modes", static_cast<int64_t>(b.modes)},
                  {"state", b.state},
                  {"residual_tol", b.residual_tol},
                  {"eig_tol", b.eig_tol},
                  {"basis_size", static_cast<int64_t>(b.basis_size)},
                  {"max_restarts", static_cast<int64_t>(b.max_restarts)},
                  {"ilut_droptol", b.ilut_droptol},
                  {"ilut_fill", static_cast<int64_t>(b.ilut_fill)}};
  if (b.omega_min) bdg.insert("omega_min", to_table(*b.omega_min));
  root.insert("bdg", bdg);
  root.insert("reduce1d", toml::table{{"optimize", c.reduce1d.optimize}});
  toml::table checks{{"g1d_rel_tol", c.checks.g1d_rel_tol}};
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) checks.insert(k, *v);
  };
  put("min_cost_reduction", c.checks.min_cost_reduction);
  put("max_final_infidelity", c.checks.max_final_infidelity);
  put("max_continuation_infidelity", c.checks.max_continuation_infidelity);
  put("max_bdg_residual", c.checks.max_bdg_residual);
  put("g1d_h_hz_um", c.checks.g1d_h_hz_um);
  root.insert("assert", checks);
  root.insert("output", toml::table{{"directory", c.output.directory},
                                    {"record_stride", static_cast<int64_t>(c.output.record_stride)},
                                    {"snapshot_stride", static_cast<int64_t>(c.output.snapshot_stride)}});
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

/// Dimensionless quantities derived from a config's physical inputs.
struct ResolvedScenario {
  UnitSystem units;
  double g = 0.0;
  TrapModel model;
  double horizon = 0.0;  ///< T in t0
  double continue_time = 0.0;

  Grid grid(const std::vector<int>& points) const { return Grid(points, half_lengths); }
  int steps(double dt_ms) const { return steps_for(horizon, units.time_from_ms(dt_ms)); }

  std::vector<double> half_lengths;  ///< in l0
};

inline UnitSystem units_of(const ScenarioConfig& c) { return {c.mass_kg, c.length_unit_um * constants::micrometre}; }

inline TrapModel build_trap(const TrapConfig& t, const UnitSystem& u) {
  auto f = [&](const char* k) { return t.frequencies.at(k).dimensionless(u); };
  auto scalar = [&](const char* k, double fallback) {
    const auto it = t.scalars.find(k);
    return it == t.scalars.end() ? fallback : it->second;
  };
  if (t.variant == "harmonic-2p") return TrapModel(HarmonicTwoParam{f("wx_i"), f("wx_f"), f("wy_i"), f("wy_f"), f("wz")});
  if (t.variant == "toroidal-2p") {
    ToroidalTwoParam m;
    m.wx_i = f("wx_i");
    m.wx_f = f("wx_f");
    m.wy = f("wy");
    m.wz = f("wz");
    m.v0_star = f("v0_star");  // energy h f in hbar/t0 equals 2 pi f t0
    m.w0 = u.length_from_um(t.scalars.at("w0_um"));
    m.chi = SaturationCurve(t.saturation);
    return TrapModel(m);
  }
  RfSplit rf;
  rf.omega0 = f("omega0");
  rf.omega_perp = f("omega_perp");
  rf.omega_par = f("omega_par");
  rf.detuning0 = t.frequencies.at("detuning0").dimensionless(u);
  rf.rabi_star = f("rabi_star");
  rf.g_F = scalar("g_F", rf.g_F);
  rf.m_F = scalar("m_F", rf.m_F);
  rf.m_tilde = scalar("m_tilde", rf.m_tilde);
  rf.chi = SaturationCurve(t.saturation);
  rf.two_param = t.variant == "rf-split-2p";
  if (t.coupling == "projected") rf.coupling = RfSplit::Coupling::projected;
  else if (t.coupling == "uniform") rf.coupling = RfSplit::Coupling::uniform;
  else throw ConfigError("config: trap.coupling must be projected or uniform");
  return TrapModel(rf);
}

inline ResolvedScenario resolve(const ScenarioConfig& c) {
  ResolvedScenario r;
  r.units = units_of(c);
  r.g = dimensionless_units(c.atoms, c.scattering_length_nm * constants::nanometre, c.mass_kg, r.units.l0).g;
  r.model = build_trap(c.trap, r.units);
  r.horizon = r.units.time_from_ms(c.horizon_ms);
  r.continue_time = r.units.time_from_ms(c.continue_ms);
  for (double h : c.half_lengths_um) r.half_lengths.push_back(r.units.length_from_um(h));
  return r;
}

/// lambda(t) = start + (end - start) t/T + a sin(pi t/T), endpoints exact.
inline ControlCurve initial_control(const ControlConfig& c, double horizon, int steps) {
  const std::size_t m = c.start.size();
  std::vector<double> amp = c.sine_amplitude.empty() ? std::vector<double>(m, 0.0) : c.sine_amplitude;
  auto curve = ControlCurve::from_function(horizon, steps, static_cast<int>(m), [&](double t) {
    std::vector<double> v(m);
    const double s = t / horizon;
    for (std::size_t j = 0; j < m; ++j) v[j] = c.start[j] + (c.end[j] - c.start[j]) * s + amp[j] * std::sin(std::numbers::pi * s);
    return v;
  });
  for (std::size_t j = 0; j < m; ++j) {
    curve(0, static_cast<int>(j)) = c.start[j];
    curve(steps, static_cast<int>(j)) = c.end[j];
  }
  return curve;
}

inline GroundStateOptions ground_state_options(const GroundStateConfig& g) {
  GroundStateOptions o;
  o.integrator = g.integrator == "fd-rk4" ? GroundStateIntegrator::fd_rk4 : GroundStateIntegrator::split_step;
  o.residual_tol = g.residual_tol;
  o.energy_tol = g.energy_tol;
  o.dtau_initial = g.dtau_initial;
  o.dtau_final = g.dtau_final;
  o.energy_stride = g.energy_stride;
  o.max_iterations = g.max_iterations;
  return o;
}

/// Levels from the config; without a [[levels]] list the base grid and dt form a single level.
inline LevelSchedule schedule_of(const ScenarioConfig& c, const UnitSystem& u) {
  LevelSchedule s;
  if (c.levels.empty()) s.levels.push_back({c.points, u.time_from_ms(c.dt_ms)});
  for (const auto& l : c.levels) s.levels.push_back({l.points, u.time_from_ms(l.dt_ms)});
  return s;
}

}  // namespace gpeopt
