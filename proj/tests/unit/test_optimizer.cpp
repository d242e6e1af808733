#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/gpe/ground_state.hpp"
#include "gpeopt/optim/line_search.hpp"
#include "gpeopt/optim/optimizer.hpp"

using namespace gpeopt;
using std::numbers::pi;

namespace {

/// J = (1/2) sum_n w_n (l_n - l*_n)^2 dt with stiff weights. Its H1 gradient
/// follows from G'' = r, r = -w (l - l*).
struct WeightedQuadratic {
  ControlCurve target;
  std::vector<double> w;

  explicit WeightedQuadratic(int N)
      : target(ControlCurve::from_function(1.0, N, 2, [](double t) {
          return std::vector<double>{t + 0.3 * std::sin(pi * t), t - 0.2 * std::sin(2 * pi * t)};
        })) {
    for (int n = 0; n <= N; ++n) w.push_back(1.0 + 50.0 * n / N);
  }

  CostBreakdown cost(const ControlCurve& l) const {
    double j = 0.0;
    for (int n = 0; n <= l.steps(); ++n)
      for (int k = 0; k < 2; ++k) j += 0.5 * w[static_cast<std::size_t>(n)] * std::pow(l(n, k) - target(n, k), 2) * l.dt();
    CostBreakdown c;
    c.infidelity_term = j;
    c.total = j;
    return c;
  }

  GradientResult gradient(const ControlCurve& l) const {
    ControlCurve r(l.horizon(), l.steps(), 2);
    for (int n = 0; n <= l.steps(); ++n)
      for (int k = 0; k < 2; ++k) r(n, k) = -w[static_cast<std::size_t>(n)] * (l(n, k) - target(n, k));
    return {h1_gradient(r), cost(l), 0.0};
  }

  Objective objective() const {
    return {[this](const ControlCurve& l) { return cost(l); }, [this](const ControlCurve& l) { return gradient(l); }};
  }
};

Scenario small_rotation() {
  Grid grid({16, 16, 8}, {6.0, 6.0, 3.0});
  Scenario s;
  s.model = TrapModel(HarmonicTwoParam{2.0, 1.0, 1.0, 2.0, 4.0});
  s.g = 10.0;
  GroundStateOptions o;
  o.residual_tol = 1e-7;
  o.energy_stride = 10;
  s.initial_state = ground_state(s.model, std::vector<double>{0, 0}, s.g, grid, o).state;
  s.target_state = ground_state(s.model, std::vector<double>{1, 1}, s.g, grid, o).state;
  return s;
}

void expect_same_endpoints(const ControlCurve& a, const ControlCurve& b) {
  for (int j = 0; j < a.components(); ++j) {
    EXPECT_EQ(a(0, j), b(0, j));
    EXPECT_EQ(a(a.steps(), j), b(b.steps(), j));
  }
}

}  // namespace

TEST(LineSearch, ExactOnQuadraticFromEveryStart) {
  const double astar = 0.37;
  auto phi = [&](double a) { return (a - astar) * (a - astar); };
  for (double a0 : {0.3 * astar, astar, 10.0 * astar, 1e-4 * astar}) {
    const auto r = line_search(phi, astar * astar, -2.0 * astar, a0);
    ASSERT_TRUE(r.success) << a0;
    EXPECT_NEAR(r.alpha, astar, 1e-6) << a0;
  }
}

TEST(LineSearch, TinySlopeStillNonIncreasing) {
  auto phi = [](double a) { return 1.0 - 1e-12 * a + a * a; };
  const auto r = line_search(phi, 1.0, -1e-12, 1.0);
  EXPECT_LE(r.value, 1.0);
  EXPECT_GE(r.alpha, 0.0);
}

TEST(LineSearch, RejectsAscentDirection) {
  EXPECT_THROW(line_search([](double a) { return a; }, 0.0, 1.0, 1.0), NumericalError);
}

TEST(LineSearch, ReportsFailureWithoutDecrease) {
  // Slope claims descent but every trial is worse.
  const auto r = line_search([](double a) { return 1.0 + a; }, 1.0, -1.0, 1.0);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.alpha, 0.0);
}

TEST(LineSearchConfig, WolfeConstantsValidated) {
  LineSearchConfig c;
  c.delta = 0.95;
  EXPECT_THROW(c.validate(), ConfigError);
  OptimizerConfig o;
  o.max_iters = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

TEST(Minimize, ConvergesOnStiffQuadraticAndKeepsEndpoints) {
  const WeightedQuadratic q(200);
  const auto l0 = ControlCurve::linear(1.0, 200, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 200;
  cfg.cost_tol = 0.0;
  const auto res = minimize(l0, q.objective(), cfg);
  EXPECT_LE(res.final_cost().total, 1e-12 * res.initial_cost().total);
  expect_same_endpoints(res.control, l0);
  for (std::size_t i = 1; i < res.log.size(); ++i) EXPECT_LT(res.log[i].cost.total, res.log[i - 1].cost.total);
}

TEST(Minimize, ConjugateGradientBeatsSteepestDescent) {
  const WeightedQuadratic q(200);
  const auto l0 = ControlCurve::linear(1.0, 200, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 30;
  cfg.cost_tol = 0.0;
  const auto hz = minimize(l0, q.objective(), cfg);
  cfg.method = OptimizerMethod::steepest_descent;
  const auto sd = minimize(l0, q.objective(), cfg);
  EXPECT_LT(hz.final_cost().total, 1e-3 * sd.final_cost().total);
}

TEST(Minimize, RestartEveryIterationIsSteepestDescent) {
  const WeightedQuadratic q(100);
  const auto l0 = ControlCurve::linear(1.0, 100, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 8;
  cfg.restart_every = 1;
  const auto hz = minimize(l0, q.objective(), cfg);
  cfg.restart_every = 0;
  cfg.method = OptimizerMethod::steepest_descent;
  const auto sd = minimize(l0, q.objective(), cfg);
  ASSERT_EQ(hz.log.size(), sd.log.size());
  for (std::size_t i = 0; i < hz.log.size(); ++i) {
    EXPECT_EQ(hz.log[i].cost.total, sd.log[i].cost.total);
    EXPECT_EQ(hz.log[i].step, sd.log[i].step);
  }
  EXPECT_EQ(hz.control.samples(), sd.control.samples());
}

TEST(Minimize, OptimalStartReturnsUnchanged) {
  const WeightedQuadratic q(50);
  const auto res = minimize(q.target, q.objective(), OptimizerConfig{});
  EXPECT_EQ(res.status, OptimizerStatus::gradient_converged);
  EXPECT_EQ(res.log.size(), 1u);
  EXPECT_EQ(res.control.samples(), q.target.samples());
}

TEST(Minimize, StopsOnStalledCost) {
  const WeightedQuadratic q(50);
  const auto l0 = ControlCurve::linear(1.0, 50, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 500;
  cfg.grad_tol = 0.0;
  cfg.cost_tol = 1e-3;
  // A constant floor makes the relative decrease vanish.
  Objective obj = q.objective();
  auto cost = obj.cost;
  auto grad = obj.gradient;
  obj.cost = [cost](const ControlCurve& l) {
    auto c = cost(l);
    c.total += 1.0;
    return c;
  };
  obj.gradient = [grad](const ControlCurve& l) {
    auto g = grad(l);
    g.cost.total += 1.0;
    return g;
  };
  const auto res = minimize(l0, obj, cfg);
  EXPECT_EQ(res.status, OptimizerStatus::cost_converged);
  EXPECT_LT(res.log.size(), 501u);
}

TEST(Minimize, RealScenarioDecreasesAndIsDeterministic) {
  const Scenario s = small_rotation();
  const auto l0 = ControlCurve::from_function(2.0, 100, 2, [](double t) {
    const double b = 0.25 * std::sin(pi * t / 2.0);
    return std::vector<double>{t / 2.0 + b, t / 2.0 - b};
  });
  OptimizerConfig cfg;
  cfg.max_iters = 4;
  const auto a = minimize(l0, s, cfg);
  const auto b = minimize(l0, s, cfg);
  ASSERT_GE(a.log.size(), 2u);
  EXPECT_LT(a.log[1].cost.total, a.log[0].cost.total);
  for (std::size_t i = 1; i < a.log.size(); ++i) EXPECT_LT(a.log[i].cost.total, a.log[i - 1].cost.total);
  expect_same_endpoints(a.control, l0);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].cost.total, b.log[i].cost.total);
}

TEST(Multilevel, SingleLevelEqualsMinimize) {
  const Scenario s = small_rotation();
  const auto l0 = ControlCurve::linear(2.0, 100, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 3;
  LevelSchedule sched{{Level{{16, 16, 8}, 0.02}}};
  const auto ml = multilevel_optimize(l0, [&](const Level&, std::size_t) { return s; }, sched, cfg);
  const auto direct = minimize(l0, s, cfg);
  ASSERT_EQ(ml.levels.size(), 1u);
  EXPECT_EQ(ml.control.samples(), direct.control.samples());
}

TEST(Multilevel, RefinementKeepsCostBoundedAndEndpointsExact) {
  auto factory = [](const Level& lv, std::size_t) {
    Grid grid(lv.points, {6.0, 6.0, 3.0});
    Scenario s;
    s.model = TrapModel(HarmonicTwoParam{2.0, 1.0, 1.0, 2.0, 4.0});
    s.g = 10.0;
    GroundStateOptions o;
    o.residual_tol = 1e-7;
    o.energy_stride = 10;
    s.initial_state = ground_state(s.model, std::vector<double>{0, 0}, s.g, grid, o).state;
    s.target_state = ground_state(s.model, std::vector<double>{1, 1}, s.g, grid, o).state;
    return s;
  };
  const auto l0 = ControlCurve::linear(2.0, 50, {0.0, 0.0}, {1.0, 1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 4;
  LevelSchedule sched{{Level{{16, 16, 8}, 0.04}, Level{{24, 24, 8}, 0.02}}};
  const auto ml = multilevel_optimize(l0, factory, sched, cfg, 0.0);
  ASSERT_EQ(ml.levels.size(), 2u);
  EXPECT_EQ(ml.control.steps(), 100);
  EXPECT_LE(ml.levels[1].initial_cost().total, 1.5 * ml.levels[0].final_cost().total);
  expect_same_endpoints(ml.control, l0);
}

TEST(Multilevel, ScheduleMustRefine) {
  LevelSchedule bad{{Level{{32, 32, 8}, 0.01}, Level{{16, 16, 8}, 0.01}}};
  EXPECT_THROW(bad.validate(), ConfigError);
  LevelSchedule bad_dt{{Level{{16, 16, 8}, 0.01}, Level{{16, 16, 8}, 0.02}}};
  EXPECT_THROW(bad_dt.validate(), ConfigError);
  EXPECT_THROW(LevelSchedule{}.validate(), ConfigError);
}
