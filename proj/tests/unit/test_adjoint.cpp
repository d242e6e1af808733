#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpeopt/adjoint/adjoint.hpp"
#include "gpeopt/gpe/ground_state.hpp"
#include "gpeopt/gpe/propagate.hpp"
#include "oracles.hpp"

using namespace gpeopt;
using std::numbers::pi;

namespace {

ControlCurve random_curve(double T, int N, int m, double scale = 1.0) {
  ControlCurve c(T, N, m);
  for (double& x : c.samples()) x = scale * oracle::uniform(-1.0, 1.0);
  return c;
}

/// Small harmonic rotation in dimensionless units, cheap enough for repeated
/// forward/backward solves.
Scenario small_rotation(double g, bool static_trap = false) {
  Grid grid({16, 16, 8}, {6.0, 6.0, 3.0});
  HarmonicTwoParam h{2.0, 1.0, 1.0, 2.0, 4.0};
  if (static_trap) h = {1.5, 1.5, 1.5, 1.5, 4.0};
  Scenario s;
  s.model = TrapModel(h);
  s.g = g;
  GroundStateOptions o;
  o.residual_tol = 1e-7;
  o.energy_stride = 10;
  const std::vector<double> a = {0.0, 0.0}, b = {1.0, 1.0};
  s.initial_state = ground_state(s.model, a, g, grid, o).state;
  s.target_state = ground_state(s.model, b, g, grid, o).state;
  return s;
}

ControlCurve bent_ramp(double T, int N) {
  return ControlCurve::from_function(T, N, 2, [&](double t) {
    const double s = 0.25 * std::sin(pi * t / T), r = t / T;
    return std::vector<double>{r + s, r - s};
  });
}

ControlCurve sine_variation(double T, int N) {
  return ControlCurve::from_function(T, N, 2, [&](double t) {
    const double s = (t == 0.0 || t == T) ? 0.0 : std::sin(pi * t / T);
    return std::vector<double>{s, s};
  });
}

}  // namespace

TEST(H1Gradient, ConstantSourceGivesParabola) {
  const double T = 3.0, c = 1.7;
  ControlCurve r(T, 300, 1);
  for (double& x : r.samples()) x = c;
  const auto G = h1_gradient(r);
  for (int n = 0; n <= r.steps(); ++n) {
    const double t = r.time(n);
    EXPECT_NEAR(G(n, 0), 0.5 * c * t * (t - T), 1e-10);
  }
}

TEST(H1Gradient, ZeroSourceGivesExactZero) {
  const auto G = h1_gradient(ControlCurve(2.0, 50, 2));
  for (double x : G.samples()) EXPECT_EQ(x, 0.0);
}

TEST(H1Gradient, DiscreteResidualOnRandomSource) {
  const auto r = random_curve(5.0, 400, 2, 3.0);
  const auto G = h1_gradient(r);
  const double h2 = r.dt() * r.dt();
  double rmax = 0.0, res = 0.0;
  for (double x : r.samples()) rmax = std::max(rmax, std::abs(x));
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(G(0, j), 0.0);
    EXPECT_EQ(G(r.steps(), j), 0.0);
    for (int n = 1; n < r.steps(); ++n)
      res = std::max(res, std::abs((G(n - 1, j) - 2 * G(n, j) + G(n + 1, j)) / h2 - r(n, j)));
  }
  EXPECT_LE(res, 1e-10 * rmax);
}

TEST(H1Gradient, InnerProductIsMinusIntegralOfSource) {
  // Summation by parts: (G, v)_H1 = -sum_n r_n v_n dt for v vanishing at the ends.
  const auto r = random_curve(2.0, 120, 1);
  auto v = random_curve(2.0, 120, 1);
  v(0, 0) = v(120, 0) = 0.0;
  const auto G = h1_gradient(r);
  double ref = 0.0;
  for (int n = 1; n < 120; ++n) ref -= r(n, 0) * v(n, 0) * r.dt();
  EXPECT_NEAR(h1_inner_product(G, v), ref, 1e-12 * (1.0 + std::abs(ref)));
}

TEST(SecondDifference, ExactOnCubicsIncludingEnds) {
  const ControlCurve c = ControlCurve::from_function(2.0, 20, 1, [](double t) { return std::vector<double>{t * t * t - 2 * t * t + t}; });
  const auto d = detail::second_difference(c);
  for (int n = 0; n <= 20; ++n) EXPECT_NEAR(d(n, 0), 6 * c.time(n) - 4, 1e-9);
}

TEST(AdjointFlow, PhaseSubstepMatchesFineRk4AlongTrajectory) {
  // i p' = (V + 2g|psi|^2) p + g psi^2 p* with psi(s) rotating at V + g|psi|^2,
  // integrated backward from the sub-step end by classical RK4.
  const double vs[] = {3.0, 0.0, 40.0, 1e-5};
  const cplx psis[] = {{0.3, 0.4}, {1.1, -0.7}, {0.5, 0.0}, {1e-3, 2e-3}};
  const double g = 2.0, tau = -0.37;
  for (double pre : {0.0, 0.21}) {
    for (int k = 0; k < 4; ++k) {
      const cplx p0(0.6, -0.2);
      std::vector<cplx> p = {p0};
      std::vector<double> v = {vs[k]};
      std::vector<cplx> psi = {psis[k]};
      detail::adjoint_phase_substep(p, v, psi, g, tau, pre);

      const double rho = std::norm(psis[k]), w = vs[k] + g * rho;
      const cplx ref = psis[k] * std::polar(1.0, -w * pre);
      auto f = [&](double s, cplx q) {
        const cplx ps = ref * std::polar(1.0, -w * s);
        return cplx(0, -1) * ((vs[k] + 2 * g * rho) * q + g * ps * ps * std::conj(q));
      };
      cplx q = p0;
      const int M = 20000;
      const double h = tau / M;
      for (int i = 0; i < M; ++i) {
        const double s = i * h;
        const cplx k1 = f(s, q), k2 = f(s + h / 2, q + 0.5 * h * k1), k3 = f(s + h / 2, q + 0.5 * h * k2), k4 = f(s + h, q + h * k3);
        q += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      EXPECT_NEAR(std::abs(p[0] - q), 0.0, 1e-11) << "case " << k << " pre " << pre;
    }
  }
}

TEST(AdjointSource, VanishesForControlIndependentPotentialAndLinearRamp) {
  const Scenario s = small_rotation(5.0, true);
  const auto lambda = ControlCurve::linear(1.0, 100, {0.0, 0.0}, {1.0, 1.0});
  const auto out = adjoint_source(lambda, s);
  for (double x : out.source.samples()) EXPECT_LE(std::abs(x), 1e-12);
}

TEST(AdjointSource, LinearAdjointConservesNormWithoutInteraction) {
  const Scenario s = small_rotation(0.0);
  const auto lambda = bent_ramp(1.5, 150);
  AdjointOptions o;
  o.record_adjoint_norm = true;
  const auto out = adjoint_source(lambda, s, o);
  ASSERT_EQ(out.adjoint_norms.size(), 151u);
  const double a = std::abs(out.cost.overlap);
  for (double n : out.adjoint_norms) EXPECT_NEAR(n, a, 1e-10);
}

TEST(AdjointSource, BackwardRecomputationRecoversInitialState) {
  const Scenario s = small_rotation(20.0);
  const auto out = adjoint_source(bent_ramp(2.0, 400), s);
  EXPECT_LE(out.reversibility_error, 1e-8);
  EXPECT_GT(out.reversibility_error, 0.0);
}

TEST(AdjointSource, CostMatchesForwardEvaluation) {
  const Scenario s = small_rotation(10.0);
  const auto lambda = bent_ramp(1.0, 100);
  const auto a = adjoint_source(lambda, s).cost;
  const auto b = evaluate_cost(lambda, s);
  EXPECT_DOUBLE_EQ(a.total, b.total);
  EXPECT_NEAR(a.total, a.infidelity_term + a.penalty_term, 1e-15);
  EXPECT_GE(a.penalty_term, 0.0);
  EXPECT_GE(a.infidelity_term, 0.0);
}

TEST(Cost, TargetReachedLeavesOnlyPenalty) {
  Scenario s = small_rotation(0.0, true);
  const auto lambda = ControlCurve::linear(1.0, 100, {0.0, 0.0}, {1.0, 1.0});
  // Target is the reached state times a global phase.
  PropagatorConfig cfg{lambda.dt(), lambda.steps(), s.g};
  s.target_state = propagate(s.initial_state, s.model, lambda, cfg).state;
  for (auto& x : s.target_state.values) x *= std::polar(1.0, 0.7);
  const auto c = evaluate_cost(lambda, s);
  EXPECT_NEAR(c.infidelity_term, 0.0, 1e-12);
  EXPECT_NEAR(c.total, c.penalty_term, 1e-12);
  EXPECT_NEAR(c.penalty_term, 0.5 * s.gamma * 2.0, 1e-15);
  EXPECT_EQ(Scenario{}.gamma, 1e-6);
}

TEST(Gradient, EndpointsAreExactlyZero) {
  const Scenario s = small_rotation(10.0);
  const auto gr = cost_gradient(bent_ramp(1.0, 100), s);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(gr.gradient(0, j), 0.0);
    EXPECT_EQ(gr.gradient(100, j), 0.0);
  }
}

TEST(Gradient, AgreesWithCentralDifferences) {
  Scenario s = small_rotation(10.0);
  s.gamma = 1e-3;
  const double T = 2.0;
  const int N = 200;
  const auto lambda = bent_ramp(T, N);
  const auto c = gradient_check(lambda, sine_variation(T, N), 1e-5, s);
  EXPECT_GT(std::abs(c.finite_difference), 1e-6);
  EXPECT_LE(c.relative_error, 1e-3) << c.directional << " vs " << c.finite_difference;
}

TEST(Gradient, MismatchShrinksAtSecondOrder) {
  Scenario s = small_rotation(10.0);
  const double T = 2.0;
  double err[2];
  for (int k = 0; k < 2; ++k) {
    const int N = 50 << k;
    const auto c = gradient_check(bent_ramp(T, N), sine_variation(T, N), 1e-5, s);
    err[k] = std::abs(c.directional - c.finite_difference);
  }
  const double ratio = err[0] / err[1];
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
}

TEST(Gradient, ZeroVariationGivesZero) {
  const Scenario s = small_rotation(10.0);
  const auto c = gradient_check(bent_ramp(1.0, 50), ControlCurve(1.0, 50, 2), 1e-5, s);
  EXPECT_EQ(c.directional, 0.0);
  EXPECT_EQ(c.finite_difference, 0.0);
  EXPECT_EQ(c.relative_error, 0.0);
}

TEST(Gradient, VariationMustVanishAtEnds) {
  const Scenario s = small_rotation(10.0);
  ControlCurve dl(1.0, 50, 2);
  dl(0, 0) = 1.0;
  EXPECT_THROW(gradient_check(bent_ramp(1.0, 50), dl, 1e-5, s), ShapeError);
}

TEST(Gradient, JacobianMethodsAgree) {
  Scenario s = small_rotation(10.0);
  const auto lambda = bent_ramp(1.0, 80);
  const auto ga = cost_gradient(lambda, s).gradient;
  s.jacobian = JacobianMethod::complex_step;
  const auto gc = cost_gradient(lambda, s).gradient;
  s.jacobian = JacobianMethod::central_difference;
  const auto gd = cost_gradient(lambda, s).gradient;
  const double scale = h1_norm(ga);
  EXPECT_LE(h1_norm(axpy(ga, -1.0, gc)), 1e-12 * scale);
  EXPECT_LE(h1_norm(axpy(ga, -1.0, gd)), 1e-6 * scale);
}
