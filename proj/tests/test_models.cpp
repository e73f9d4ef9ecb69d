#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wmfc/models/functional.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/models/smooth.hpp"
#include "wmfc/validate.hpp"

using namespace wmfc;
using namespace wmfc::models;

namespace {

MeasureSummary with_mean(double m) {
  MeasureSummary s;
  s[0] = m;
  return s;
}

}  // namespace

TEST(LqModel, PassesHypothesisChecks) {
  const LqModel model(LQScenario{}, 0.7);
  const HypothesisReport rep = validate_hypothesis(model, make_probes(model));
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.failures().empty());
  ASSERT_NE(rep.find("b_x"), nullptr);
  EXPECT_LE(rep.find("b_mu")->measured, 1e-4);
}

TEST(LqModel, DriftFormula) {
  LQScenario sc;
  sc.rho = 0.1;
  sc.a = 0.5;
  sc.b = 2.0;
  const LqModel model(sc, 0.0);
  const Dynamics d = model.dynamics(0.3, 1.0, with_mean(2.0), 3.0);
  EXPECT_NEAR(d.b.value, 7.1, 1e-12);
  EXPECT_DOUBLE_EQ(d.b.d_x, 0.1);
  EXPECT_DOUBLE_EQ(d.b.d_u, 2.0);
  EXPECT_DOUBLE_EQ(d.b.d_m[0], 0.5);
  EXPECT_DOUBLE_EQ(d.sigma.value, sc.c(0.3));
}

TEST(LqModel, NoMeasureDependenceWithoutLoading) {
  LQScenario sc;
  sc.a = 0.0;
  const LqModel model(sc, 0.0);
  const Dynamics d1 = model.dynamics(0.5, 1.0, with_mean(-3.0), 0.2);
  const Dynamics d2 = model.dynamics(0.5, 1.0, with_mean(8.0), 0.2);
  EXPECT_EQ(d1.b.value, d2.b.value);
  for (double v : d1.b.d_m) EXPECT_EQ(v, 0.0);
}

TEST(LqModel, TerminalGradientVanishesAtTarget) {
  LQScenario sc;
  const LqModel model(sc, 0.0);
  EXPECT_DOUBLE_EQ(model.terminal_cost(sc.c0, 1.0).d_x, 0.0);
  EXPECT_DOUBLE_EQ(model.terminal_cost(sc.c0, 1.0).value, 0.0);
  const LqModel shifted(sc, 0.4);
  EXPECT_DOUBLE_EQ(shifted.terminal_cost(sc.c0, 1.0).d_x, 0.4);
}

TEST(LqModel, RunningCostQuadratic) {
  LQScenario sc;
  sc.L = 2.0;
  sc.M = 3.0;
  sc.N = 4.0;
  const LqModel model(sc, 0.0);
  const RunningCost c = model.running_cost(0.0, 1.0, 2.0, {}, 0.5);
  EXPECT_DOUBLE_EQ(c.value, 0.5 * (2.0 + 12.0 + 1.0));
  EXPECT_DOUBLE_EQ(c.d_a, 6.0);
  EXPECT_DOUBLE_EQ(c.d_u, 2.0);
}

TEST(LqModel, RejectsInvalidScenario) {
  LQScenario sc;
  sc.N = 0.0;
  EXPECT_THROW(LqModel(sc, 0.0), ValidationError);
  sc = LQScenario{};
  sc.a0 = -1.0;
  EXPECT_THROW(LqModel(sc, 0.0), ValidationError);
}

TEST(LqScenario, ExpectedWeightIntegratesRate) {
  LQScenario sc;
  sc.alpha = TimeFunction({{0.0, 0.0}, {1.0, 1.0}});
  sc.a0 = 2.0;
  EXPECT_NEAR(sc.expected_weight(1.0), 2.0 * std::exp(0.5), 1e-10);
}

TEST(LqScenario, JsonRoundTrip) {
  LQScenario sc;
  sc.rho = TimeFunction({{0.0, 0.01}, {0.5, 0.03}, {1.0, 0.02}});
  sc.c0 = 0.9;
  const LQScenario back = lq_scenario_from_json(lq_scenario_to_json(sc));
  EXPECT_EQ(lq_scenario_to_json(back), lq_scenario_to_json(sc));
  EXPECT_NEAR(back.rho(0.25), 0.02, 1e-15);
}

TEST(LqScenario, JsonRejectsUnknownKey) {
  nlohmann::json j = lq_scenario_to_json(LQScenario{});
  j["rho_rate"] = 0.1;
  EXPECT_THROW(lq_scenario_from_json(j), ValidationError);
}

TEST(TimeFunction, PiecewiseLinear) {
  const TimeFunction f({{0.0, 1.0}, {1.0, 3.0}});
  EXPECT_DOUBLE_EQ(f(0.5), 2.0);
  EXPECT_DOUBLE_EQ(f(-1.0), 1.0);
  EXPECT_DOUBLE_EQ(f(2.0), 3.0);
  EXPECT_NEAR(f.integral(0.0, 1.0), 2.0, 1e-12);
  EXPECT_THROW(TimeFunction({{1.0, 0.0}, {0.5, 1.0}}), ValidationError);
}

TEST(SmoothModel, PassesHypothesisChecks) {
  const SmoothTestModel model{SmoothParams{}};
  const HypothesisReport rep = validate_hypothesis(model, make_probes(model));
  EXPECT_TRUE(rep.passed()) << ::testing::PrintToString(rep.failures());
}

TEST(SmoothModel, ZeroAmplitudeIsConstant) {
  const SmoothTestModel model{SmoothParams::zero_amplitude()};
  MeasureSummary s1, s2;
  s1[0] = 0.3;
  s1[1] = -0.2;
  s2[0] = 2.0;
  s2[1] = 0.9;
  const Dynamics d1 = model.dynamics(0.1, -1.0, s1, 0.5), d2 = model.dynamics(0.9, 2.5, s2, -1.5);
  EXPECT_EQ(d1.b.value, d2.b.value);
  EXPECT_EQ(d1.sigma.value, d2.sigma.value);
  EXPECT_EQ(d1.alpha.value, d2.alpha.value);
  EXPECT_EQ(d1.beta.value, d2.beta.value);
  EXPECT_EQ(d1.b.d_x, 0.0);
  EXPECT_EQ(d1.b.d_u, 0.0);
  EXPECT_EQ(model.running_cost(0.0, 1.0, 2.0, s1, 0.3).value, model.running_cost(0.0, -4.0, 0.5, s2, -1.0).value);
}

TEST(SmoothModel, KernelMatchesDirectionalDifference) {
  const SmoothTestModel model{SmoothParams{}};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), w(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xm(5), am(5), xn(4), an(4);
    for (std::size_t i = 0; i < 5; ++i) {
      xm[i] = pos(rng);
      am[i] = w(rng);
    }
    for (std::size_t i = 0; i < 4; ++i) {
      xn[i] = pos(rng);
      an[i] = w(rng);
    }
    const WeightedEnsemble mu(xm, am), nu(xn, an);
    const MeasureSummary sm = model.summarize(mu), sn = model.summarize(nu);
    const double x = pos(rng), u = 0.5 * pos(rng);
    const Dynamics d = model.dynamics(0.0, x, sm, u);
    const double exact = pair(nu, [&](double xp) { return model.kernel(d.b.d_m, xp); });
    double prev = 0.0;
    for (double eps : {1e-2, 5e-3}) {
      MeasureSummary shifted = sm;
      for (std::size_t k = 0; k < model.feature_count(); ++k) shifted[k] += eps * sn[k];
      const double fd = (model.dynamics(0.0, x, shifted, u).b.value - d.b.value) / eps;
      const double err = std::abs(fd - exact);
      EXPECT_LE(err, 2.0 * eps);
      if (eps < 1e-2 && prev > 1e-9) {
        EXPECT_LE(err, 0.6 * prev);
      }
      prev = err;
    }
  }
}

TEST(Validation, FlagsUnboundedWeightDrift) {
  FunctionalModel m;
  m.with_dynamics([](double, double x, const MeasureSummary&, double) {
    Dynamics d;
    d.alpha.value = x;
    d.alpha.d_x = 1.0;
    return d;
  });
  ProbeOptions wide;
  wide.x_scale = 1000.0;
  const HypothesisReport rep = validate_hypothesis(m, make_probes(m, wide));
  EXPECT_FALSE(rep.passed());
  const HypothesisCheck* c = rep.find("alpha bound");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->passed);
  EXPECT_TRUE(c->blocking);
}

TEST(Validation, FlagsWrongStateDerivative) {
  FunctionalModel m;
  m.with_dynamics([](double, double x, const MeasureSummary&, double) {
    Dynamics d;
    d.b.value = std::sin(x);
    d.b.d_x = std::cos(x) + 1.0;
    return d;
  });
  const HypothesisReport rep = validate_hypothesis(m, make_probes(m));
  EXPECT_FALSE(rep.passed());
  ASSERT_NE(rep.find("b_x"), nullptr);
  EXPECT_FALSE(rep.find("b_x")->passed);
  EXPECT_NEAR(rep.find("b_x")->measured, 1.0, 0.05);
}

TEST(Validation, CostGrowthOnlyWarns) {
  LQScenario sc;
  const LqModel model(sc, 0.0);
  ProbeOptions wide;
  wide.x_scale = 1000.0;
  const HypothesisReport rep = validate_hypothesis(model, make_probes(model, wide));
  EXPECT_TRUE(rep.passed());
  EXPECT_FALSE(rep.warnings().empty());
}

TEST(FunctionalModel, UnsetPiecesAreZero) {
  const FunctionalModel m;
  const Dynamics d = m.dynamics(0.0, 1.0, {}, 1.0);
  EXPECT_EQ(d.b.value, 0.0);
  EXPECT_EQ(m.running_cost(0.0, 1.0, 1.0, {}, 1.0).value, 0.0);
  EXPECT_EQ(m.terminal_cost(1.0, 1.0).value, 0.0);
  EXPECT_EQ(m.feature_count(), 0u);
}
