#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gpeopt/optim/optimizer.hpp"
#include "gpeopt/reduction/reduction1d.hpp"
#include "scenarios.hpp"

using namespace gpeopt;
using namespace testing_scenarios;
using std::numbers::pi;

TEST(EffectiveG1d, GaussianPlaneMatchesClosedForm) {
  // Density std sigma per transverse axis: int |phi~|^4 = 1 / (4 pi sigma^2).
  const double sigma = 0.6, g = 50.0;
  const Grid grid({16, 64, 64}, {2.0, 6.0, 6.0});
  const auto phi = sample_complex(grid, [&](double x, double y, double z) {
    return cplx(std::exp(-x * x - (y * y + z * z) / (4.0 * sigma * sigma)), 0.0);
  });
  EXPECT_NEAR(effective_g1d(phi, g), g / (4.0 * pi * sigma * sigma), 1e-10 * g);
}

TEST(EffectiveG1d, UniformPatchGivesCouplingOverArea) {
  const Grid grid({8, 32, 16}, {1.0, 4.0, 2.0});
  int inside = 0;
  const auto phi = sample_complex(grid, [&](double, double y, double z) {
    const bool in = std::abs(y) < 2.1 && std::abs(z) < 1.1;
    return cplx(in ? 3.0 : 0.0, 0.0);
  });
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int iz = 0; iz < grid.nz(); ++iz)
      if (phi.values[grid.index(grid.points(0) / 2, iy, iz)] != cplx(0.0)) ++inside;
  const double area = inside * grid.spacing(1) * grid.spacing(2);
  EXPECT_NEAR(effective_g1d(phi, 7.0), 7.0 / area, 1e-13);
}

TEST(EffectiveG1d, InvariantUnderGlobalPhaseAndScale) {
  const Grid grid({16, 32, 16}, {2.0, 4.0, 2.0});
  auto phi = sample_complex(grid, [](double x, double y, double z) {
    return cplx(std::exp(-x * x - 0.5 * y * y - z * z) * (1.0 + 0.2 * y), 0.1 * z);
  });
  const double a = effective_g1d(phi, 10.0);
  for (auto& x : phi.values) x *= 2.5 * std::polar(1.0, 1.1);
  EXPECT_NEAR(effective_g1d(phi, 10.0), a, 1e-13 * a);
}

TEST(EffectiveG1d, RejectsEmptyPlaneAndWrongRank) {
  const Grid grid({16, 16, 8}, {2.0, 2.0, 1.0});
  const auto phi = sample_complex(grid, [](double x, double, double) { return cplx(x, 0.0); });  // zero at x = 0
  EXPECT_THROW(effective_g1d(phi, 1.0), NumericalError);
  EXPECT_THROW(effective_g1d(ComplexField(Grid({16}, {2.0})), 1.0), ShapeError);
}

TEST(Reduction, UnitConversionToHertzMicrometre) {
  const UnitSystem u;
  EXPECT_NEAR(g1d_h_hz_um(1.0, u), 1.0 / (2.0 * pi * u.t0()), 1e-9);
  // 1 h Hz um expressed in hbar l0 / t0 round-trips.
  const double g1d = 2.0 * pi * u.t0();
  EXPECT_NEAR(g1d_h_hz_um(g1d, u), 1.0, 1e-14);
}

TEST(Reduction, HarmonicSliceIsExactParabola) {
  HarmonicTwoParam h{3.0, 1.0, 0.5, 2.0, 4.0};
  const TrapModel m(h);
  const Grid g1({32}, {4.0});
  const auto r = reduce_model(m, g1, 1.0);
  const std::vector<double> lam = {0.3, 0.8};
  const double wx = h.wx_i + 0.3 * (h.wx_f - h.wx_i);
  const auto v = r.potential(lam);
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    const double x = g1.position(i)[0];
    EXPECT_NEAR(v.values[i], 0.5 * wx * wx * x * x, 1e-13 * (1.0 + x * x));
  }
}

TEST(Reduction, RfSliceEqualsAxisOf3dEvaluation) {
  const TrapModel m = splitting_model();
  const Grid g3({32, 16, 8}, {4.0, 15.0, 2.0});
  const Grid g1 = x_axis_grid(g3);
  for (double l : {0.0, 0.6, 1.0}) {
    const std::vector<double> lam = {l};
    const auto v3 = eval_potential_raw(m, lam, g3);
    const auto v1 = eval_potential_raw(m, lam, g1);
    for (int ix = 0; ix < g3.points(0); ++ix)
      EXPECT_EQ(v1.values[static_cast<std::size_t>(ix)], v3.values[g3.index(ix, g3.ny() / 2, g3.nz() / 2)]) << l << " " << ix;
  }
}

TEST(Reduction, DoubleWellGroundStateExistsAndIsSplit) {
  const Grid g1({64}, {4.0});
  const auto r = reduce_model(splitting_model(), g1, 11.0);
  const std::vector<double> lam = {1.0};
  const auto gs = ground_state(r.potential(lam), r.g1d, quick_ground_state());
  EXPECT_NEAR(norm(gs.state), 1.0, 1e-12);
  // Density at the barrier centre is far below the well maxima.
  double peak = 0.0;
  for (const auto& x : gs.state.values) peak = std::max(peak, std::norm(x));
  EXPECT_LT(std::norm(gs.state.values[g1.origin_index()]), 1e-3 * peak);
}

TEST(Reduction, EndToEndFromCoarse3dGroundStateOptimizes) {
  const TrapModel m = splitting_model();
  const double g = rb87_coupling(2000);
  const Grid g3({32, 64, 16}, {4.0, 15.0, 2.0});
  const std::vector<double> l0 = {0.0}, l1 = {1.0};
  const auto phi3 = ground_state(m, l0, g, g3, quick_ground_state()).state;
  const auto r = reduce_model(m, phi3, g);
  ASSERT_GT(r.g1d, 0.0);

  Scenario s;
  s.model = r.model;
  s.g = r.g1d;
  s.initial_state = ground_state(r.potential(l0), r.g1d, quick_ground_state()).state;
  s.target_state = ground_state(r.potential(l1), r.g1d, quick_ground_state()).state;
  const UnitSystem u;
  const double T = u.time_from_ms(6.0);
  const auto lam = ControlCurve::linear(T, steps_for(T, 2e-3), {0.0}, {1.0});
  OptimizerConfig cfg;
  cfg.max_iters = 5;
  const auto res = minimize(lam, s, cfg);
  ASSERT_GE(res.log.size(), 3u);
  for (std::size_t i = 1; i < res.log.size(); ++i) EXPECT_LT(res.log[i].cost.total, res.log[i - 1].cost.total);
  EXPECT_EQ(res.control(0, 0), 0.0);
  EXPECT_EQ(res.control(res.control.steps(), 0), 1.0);
}
