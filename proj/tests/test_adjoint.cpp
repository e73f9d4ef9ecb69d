#include <cmath>

#include <gtest/gtest.h>

#include "wmfc/adjoint.hpp"
#include "wmfc/models/functional.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/models/smooth.hpp"

using namespace wmfc;
using namespace wmfc::models;

namespace {

struct Sim {
  NoiseBundle noise;
  EnsemblePath path;
};

Sim run(const Model& model, std::size_t steps, std::size_t n, double u, std::uint64_t seed = 1, double x0 = 0.0) {
  NoiseBundle noise = sample_noise(build_grid(1.0, static_cast<long long>(steps)), static_cast<long long>(n), seed);
  EnsemblePath path = simulate(model, ControlSpec::constant(u, steps + 1), x0, 1.0, noise);
  return {std::move(noise), std::move(path)};
}

double max_abs(const std::vector<std::vector<double>>& v) {
  double s = 0.0;
  for (const auto& row : v)
    for (double x : row) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

TEST(Adjoint, ZeroCostGivesZeroAdjoints) {
  FunctionalModel model = constant_model(0.2, 0.5, 0.1, 0.3);
  const Sim r = run(model, 10, 200, 0.0);
  const AdjointEnsemble adj = solve_adjoint(model, r.path, r.noise);
  EXPECT_EQ(max_abs(adj.p), 0.0);
  EXPECT_EQ(max_abs(adj.q), 0.0);
  EXPECT_EQ(max_abs(adj.P), 0.0);
  EXPECT_EQ(max_abs(adj.Q), 0.0);
}

TEST(Adjoint, StateCostGivesLinearStateAdjoint) {
  const FunctionalModel model = decoupled_linear_cost(false);
  const Sim r = run(model, 20, 50, 0.0);
  const AdjointEnsemble adj = solve_adjoint(model, r.path, r.noise);
  for (std::size_t m = 0; m < r.path.nodes(); ++m)
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_NEAR(adj.P[m][i], -(1.0 - r.path.grid.t(m)), 1e-12);
      EXPECT_NEAR(adj.Q[m][i], 0.0, 1e-12);
      EXPECT_NEAR(adj.p[m][i], 0.0, 1e-12);
    }
}

TEST(Adjoint, WeightCostGivesLinearWeightAdjoint) {
  const FunctionalModel model = decoupled_linear_cost(true);
  const Sim r = run(model, 20, 50, 0.0);
  const AdjointEnsemble adj = solve_adjoint(model, r.path, r.noise);
  for (std::size_t m = 0; m < r.path.nodes(); ++m)
    for (std::size_t i = 0; i < 50; ++i) {
      EXPECT_NEAR(adj.p[m][i], -(1.0 - r.path.grid.t(m)), 1e-12);
      EXPECT_NEAR(adj.q[m][i], 0.0, 1e-12);
      EXPECT_NEAR(adj.P[m][i], 0.0, 1e-12);
    }
}

TEST(Adjoint, MartingaleTerminalRecoversIntegrand) {
  // Brownian state, Phi = x^2 / 2: P_t = -E_t[X_T] = -X_t and Q = -1.
  FunctionalModel model = constant_model(0.0, 1.0, 0.0, 0.0);
  model.with_terminal_cost([](double x, double) { return TerminalCost{0.5 * x * x, x, 0.0}; });
  const Sim r = run(model, 20, 20000, 0.0, 3);
  const AdjointEnsemble adj = solve_adjoint(model, r.path, r.noise);
  for (std::size_t m : {0u, 10u, 19u}) {
    const Estimate Q = estimate(adj.Q[m]);
    EXPECT_NEAR(Q.value, -1.0, 0.05) << "node " << m;
    double err = 0.0;
    for (std::size_t i = 0; i < 20000; ++i) err = std::max(err, std::abs(adj.P[m][i] + r.path.x[m][i]));
    EXPECT_LE(err, 0.05) << "node " << m;
  }
}

TEST(Adjoint, KernelModesAgree) {
  const SmoothTestModel model{SmoothParams{}};
  const Sim r = run(model, 10, 200, 0.3, 4);
  AdjointOptions f, d;
  d.kernel_mode = KernelMode::DoubleLoop;
  const AdjointEnsemble a1 = solve_adjoint(model, r.path, r.noise, f), a2 = solve_adjoint(model, r.path, r.noise, d);
  for (std::size_t m = 0; m < r.path.nodes(); ++m)
    for (std::size_t i = 0; i < 200; ++i) {
      EXPECT_NEAR(a1.P[m][i], a2.P[m][i], 1e-10);
      EXPECT_NEAR(a1.p[m][i], a2.p[m][i], 1e-10);
    }
}

TEST(Adjoint, SubsampledKernelStaysClose) {
  const SmoothTestModel model{SmoothParams{}};
  const Sim r = run(model, 10, 400, 0.3, 4);
  AdjointOptions full, sub;
  full.kernel_mode = sub.kernel_mode = KernelMode::DoubleLoop;
  sub.subsample = 200;
  const AdjointEnsemble a1 = solve_adjoint(model, r.path, r.noise, full), a2 = solve_adjoint(model, r.path, r.noise, sub);
  EXPECT_NEAR(estimate(a1.P[0]).value, estimate(a2.P[0]).value, 0.05);
}

TEST(Adjoint, ThreadCountDoesNotChangeResult) {
  const SmoothTestModel model{SmoothParams{}};
  const Sim r = run(model, 10, 300, 0.3, 4);
  AdjointOptions one, three;
  three.threads = 3;
  EXPECT_EQ(solve_adjoint(model, r.path, r.noise, one).P, solve_adjoint(model, r.path, r.noise, three).P);
}

TEST(Adjoint, RegressionDegreeDoesNotMoveInitialMean) {
  const SmoothTestModel model{SmoothParams{}};
  const Sim r = run(model, 20, 5000, 0.3, 6);
  AdjointOptions d2, d3;
  d3.basis_degree = 3;
  const Estimate P2 = estimate(solve_adjoint(model, r.path, r.noise, d2).P[5]);
  const Estimate P3 = estimate(solve_adjoint(model, r.path, r.noise, d3).P[5]);
  EXPECT_NEAR(P2.value, P3.value, 3.0 * combined_se(P2.se, P3.se));
}

TEST(Adjoint, RejectsMismatchedNoise) {
  const SmoothTestModel model{SmoothParams{}};
  const Sim r = run(model, 10, 20, 0.0);
  EXPECT_THROW(solve_adjoint(model, r.path, sample_noise(r.path.grid, 20, 99)), ValidationError);
  AdjointOptions bad;
  bad.basis_degree = -1;
  EXPECT_THROW(solve_adjoint(model, r.path, r.noise, bad), ValidationError);
}

TEST(Hamiltonian, DirectFormula) {
  const FunctionalModel model = constant_model(1.0, 0.0, 2.0, 0.7);
  EXPECT_DOUBLE_EQ(hamiltonian(model, 0.0, 0.0, 1.0, MeasureSummary{}, 0.0, 3.0, 0.0, 1.0, 0.0), 5.0);
}

TEST(Hamiltonian, ZeroAdjointsLeaveMinusRunningCost) {
  const LqModel model(LQScenario{}, 0.0);
  const WeightedEnsemble mu({0.5, 1.5}, {1.0, 2.0});
  const double f = model.running_cost(0.2, 0.8, 1.3, model.summarize(mu), 0.4).value;
  EXPECT_DOUBLE_EQ(hamiltonian(model, 0.2, 0.8, 1.3, mu, 0.4, 0, 0, 0, 0), -f);
}

TEST(Hamiltonian, ControlDerivativeVanishesAtStationaryPoint) {
  LQScenario sc;
  sc.b = 1.0;
  sc.N = 2.0;
  const LqModel model(sc, 0.0);
  EXPECT_DOUBLE_EQ(hamiltonian_u(model, 0.0, 0.3, 1.0, MeasureSummary{}, 1.0, 2.0, 0.0, 0.0, 0.0), 0.0);
  for (double delta : {-0.5, 0.1, 2.0})
    EXPECT_NEAR(hamiltonian_u(model, 0.0, 0.3, 1.0, MeasureSummary{}, 1.0 + delta, 2.0, 0.0, 0.0, 0.0), -2.0 * delta,
                1e-14);
}

TEST(Hamiltonian, ConcaveQuadraticInControl) {
  const LqModel model(LQScenario{}, 0.0);
  auto H = [&](double u) { return hamiltonian(model, 0.1, 0.4, 1.1, MeasureSummary{}, u, 0.7, 0.2, -0.3, 0.5); };
  const double h = 0.1;
  EXPECT_NEAR((H(0.3 + h) - 2 * H(0.3) + H(0.3 - h)) / (h * h), -LQScenario{}.N, 1e-9);
}

TEST(SmpResidual, ZeroCostModelIsExactlyZero) {
  const FunctionalModel model = constant_model(0.2, 0.5, 0.1, 0.3);
  const Sim r = run(model, 10, 100, 0.0);
  const SmpResidual s = smp_residual(model, r.path, solve_adjoint(model, r.path, r.noise));
  EXPECT_EQ(s.sup, 0.0);
  EXPECT_EQ(s.per_node.size(), 10u);
}

TEST(SmpResidual, ZeroControlIsNotStationary) {
  const LqModel model(LQScenario{}, 0.0);
  const Sim r = run(model, 20, 2000, 0.0, 8, 1.0);
  const AdjointEnsemble adj = solve_adjoint(model, r.path, r.noise);
  const SmpResidual s = smp_residual(model, r.path, adj);
  EXPECT_GT(s.sup, 0.5);
  // with u = 0, H_u = b P
  double ref = 0.0;
  for (double P : adj.P[0]) ref += std::abs(LQScenario{}.b(0.0) * P);
  EXPECT_NEAR(s.per_node[0].value, ref / 2000.0, 1e-12);
}
