#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wmfc/forward.hpp"
#include "wmfc/regression.hpp"

namespace wmfc {

/// How the primed expectation E'[kernel(theta'; X_t)] is evaluated.
enum class KernelMode {
  Factorized,  // sum over measure coordinates: O(N K) per step
  DoubleLoop,  // explicit kernel at every particle pair: O(N^2) per step
};

struct AdjointOptions {
  int basis_degree = 2;
  KernelMode kernel_mode = KernelMode::Factorized;
  std::size_t subsample = 0;  // DoubleLoop only: average over the first `subsample` particles (0 = all)
  unsigned threads = 1;
};

struct AdjointStepDiagnostics {
  int degree = 0;
  std::size_t basis_size = 0;
  double residual_p = 0.0;
  double residual_P = 0.0;
};

/// Adjoint processes (p, q) and (P, Q) per node and particle, with the continuation values
/// E_m[p_{m+1}], E_m[P_{m+1}] and the drivers g, G used at each step.
struct AdjointEnsemble {
  TimeGrid grid;
  std::vector<std::vector<double>> p, q, P, Q;   // [node][particle]; q, Q at node M are 0
  std::vector<std::vector<double>> p_cont, P_cont;  // [step][particle]
  std::vector<std::vector<double>> g, G;            // [step][particle]
  std::vector<AdjointStepDiagnostics> diagnostics;  // [step]
  std::size_t fallbacks = 0;
  std::vector<std::string> warnings;
};

/// Model quantities at every particle of one node.
struct NodeEval {
  std::vector<Dynamics> dyn;
  std::vector<RunningCost> cost;
};

inline NodeEval evaluate_node(const Model& model, const EnsemblePath& path, std::size_t m, unsigned threads = 1) {
  const std::size_t n = path.particles();
  NodeEval ev{std::vector<Dynamics>(n), std::vector<RunningCost>(n)};
  const double t = path.grid.t(m);
  parallel_for(n, threads, [&](std::size_t i) {
    ev.dyn[i] = model.dynamics(t, path.x[m][i], path.summary[m], path.u[m][i]);
    ev.cost[i] = model.running_cost(t, path.x[m][i], path.a[m][i], path.summary[m], path.u[m][i]);
  });
  return ev;
}

namespace detail {

/// Measure terms of both adjoint drivers at one node:
///   out_p[i] = E'{(P' b_mu + Q' sigma_mu)(theta'; x_i) + A'(p' alpha_mu + q' beta_mu)(theta'; x_i) - f_mu(kappa'; x_i)}
///   out_P[i] = a_i E'{(P' b_mu1 + Q' sigma_mu1 + A'(p' alpha_mu1 + q' beta_mu1))(theta'; x_i) - f_mu1(kappa'; x_i)}
inline void adjoint_measure_terms(const Model& model, const EnsemblePath& path, std::size_t m, const NodeEval& ev,
                                  std::span<const double> p, std::span<const double> q,
                                  std::span<const double> P, std::span<const double> Q,
                                  const AdjointOptions& opt, std::vector<double>& out_p,
                                  std::vector<double>& out_P) {
  const std::size_t n = path.particles();
  const std::size_t kf = model.feature_count();
  const auto& x = path.x[m];
  const auto& a = path.a[m];
  out_p.assign(n, 0.0);
  out_P.assign(n, 0.0);
  if (kf == 0) return;

  auto combined = [&](std::size_t j) {
    std::array<double, kMaxFeatures> c{};
    const auto& d = ev.dyn[j];
    for (std::size_t k = 0; k < kf; ++k)
      c[k] = P[j] * d.b.d_m[k] + Q[j] * d.sigma.d_m[k] + a[j] * (p[j] * d.alpha.d_m[k] + q[j] * d.beta.d_m[k]) -
             ev.cost[j].d_m[k];
    return c;
  };

  if (opt.kernel_mode == KernelMode::Factorized) {
    std::array<double, kMaxFeatures> s{};
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = combined(j);
      for (std::size_t k = 0; k < kf; ++k) s[k] += c[k];
    }
    for (std::size_t k = 0; k < kf; ++k) s[k] /= static_cast<double>(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
      out_p[i] = model.kernel(s, x[i]);
      out_P[i] = a[i] * model.kernel_dx(s, x[i]);
    });
    return;
  }

  const std::size_t nj = opt.subsample == 0 ? n : std::min(opt.subsample, n);
  std::vector<std::array<double, kMaxFeatures>> cj(nj);
  for (std::size_t j = 0; j < nj; ++j) cj[j] = combined(j);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    double sp = 0.0, sP = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
      const auto& d = ev.dyn[j];
      const double xi = x[i];
      sp += P[j] * model.kernel(d.b.d_m, xi) + Q[j] * model.kernel(d.sigma.d_m, xi) +
            a[j] * (p[j] * model.kernel(d.alpha.d_m, xi) + q[j] * model.kernel(d.beta.d_m, xi)) -
            model.kernel(ev.cost[j].d_m, xi);
      sP += P[j] * model.kernel_dx(d.b.d_m, xi) + Q[j] * model.kernel_dx(d.sigma.d_m, xi) +
            a[j] * (p[j] * model.kernel_dx(d.alpha.d_m, xi) + q[j] * model.kernel_dx(d.beta.d_m, xi)) -
            model.kernel_dx(ev.cost[j].d_m, xi);
    }
    out_p[i] = sp / static_cast<double>(nj);
    out_P[i] = a[i] * sP / static_cast<double>(nj);
  });
}

}  // namespace detail

/// Backward Euler with least-squares Monte Carlo conditional expectations on polynomials in
/// (x, a). The adjoint is solved along the given forward path with its realized controls.
inline AdjointEnsemble solve_adjoint(const Model& model, const EnsemblePath& path, const NoiseBundle& noise,
                                     const AdjointOptions& opt = {}) {
  path.check_aligned(noise);
  require(opt.basis_degree >= 0, "adjoint: basis degree must be nonnegative");
  const TimeGrid& grid = path.grid;
  const std::size_t n = path.particles();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();

  AdjointEnsemble adj;
  adj.grid = grid;
  auto nodes = [&] { return std::vector<std::vector<double>>(grid.nodes(), std::vector<double>(n, 0.0)); };
  auto stepv = [&] { return std::vector<std::vector<double>>(steps, std::vector<double>(n, 0.0)); };
  adj.p = nodes();
  adj.q = nodes();
  adj.P = nodes();
  adj.Q = nodes();
  adj.p_cont = stepv();
  adj.P_cont = stepv();
  adj.g = stepv();
  adj.G = stepv();
  adj.diagnostics.resize(steps);

  for (std::size_t i = 0; i < n; ++i) {
    const TerminalCost tc = model.terminal_cost(path.x[steps][i], path.a[steps][i]);
    adj.p[steps][i] = -tc.d_a;
    adj.P[steps][i] = -tc.d_x;
  }

  Eigen::MatrixXd level(static_cast<Eigen::Index>(n), 2);
  Eigen::MatrixXd martingale(static_cast<Eigen::Index>(n), 2);
  std::vector<double> mp, mP;
  for (std::size_t m = steps; m-- > 0;) {
    const std::vector<std::span<const double>> regressors{path.x[m], path.a[m]};
    for (std::size_t i = 0; i < n; ++i) {
      level(static_cast<Eigen::Index>(i), 0) = adj.p[m + 1][i];
      level(static_cast<Eigen::Index>(i), 1) = adj.P[m + 1][i];
    }
    const PolynomialFit fit = PolynomialFit::fit(regressors, opt.basis_degree, level);
    // Subtracting the fitted level leaves the conditional expectation of (.) dW unchanged
    // and removes most of its variance.
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double w = noise.dw(i, m) / dt;
      martingale(r, 0) = (level(r, 0) - fit.fitted()(r, 0)) * w;
      martingale(r, 1) = (level(r, 1) - fit.fitted()(r, 1)) * w;
    }
    const PolynomialFit zfit = PolynomialFit::fit(regressors, opt.basis_degree, martingale);
    if (fit.fallbacks() > 0 || zfit.fallbacks() > 0) {
      ++adj.fallbacks;
      if (m > 0)
        adj.warnings.push_back("step " + std::to_string(m) + ": regression degree lowered to " +
                               std::to_string(fit.degree()));
    }
    adj.diagnostics[m] = {fit.degree(), fit.basis_size(), fit.residual_rms(level, 0), fit.residual_rms(level, 1)};

    auto& pc = adj.p_cont[m];
    auto& Pc = adj.P_cont[m];
    auto& q = adj.q[m];
    auto& Q = adj.Q[m];
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      pc[i] = fit.fitted()(r, 0);
      Pc[i] = fit.fitted()(r, 1);
      q[i] = zfit.fitted()(r, 0);
      Q[i] = zfit.fitted()(r, 1);
    }

    const NodeEval ev = evaluate_node(model, path, m, opt.threads);
    detail::adjoint_measure_terms(model, path, m, ev, pc, q, Pc, Q, opt, mp, mP);
    const auto& a = path.a[m];
    for (std::size_t i = 0; i < n; ++i) {
      const Dynamics& d = ev.dyn[i];
      const RunningCost& c = ev.cost[i];
      const double g = -(pc[i] * d.alpha.value + q[i] * d.beta.value - c.d_a) - mp[i];
      const double G = -(Pc[i] * d.b.d_x + Q[i] * d.sigma.d_x + a[i] * (pc[i] * d.alpha.d_x + q[i] * d.beta.d_x) -
                         c.d_x) -
                       mP[i];
      adj.g[m][i] = g;
      adj.G[m][i] = G;
      adj.p[m][i] = pc[i] - g * dt;
      adj.P[m][i] = Pc[i] - G * dt;
      if (!std::isfinite(adj.p[m][i]) || !std::isfinite(adj.P[m][i]))
        throw NumericalError("adjoint: non-finite value", m);
    }
  }
  return adj;
}

/// H = A (p alpha + q beta) + P b + Q sigma - f.
inline double hamiltonian(const Model& model, double t, double x, double a, const MeasureSummary& mu, double u,
                          double P, double Q, double p, double q) {
  const Dynamics d = model.dynamics(t, x, mu, u);
  const RunningCost c = model.running_cost(t, x, a, mu, u);
  return a * (p * d.alpha.value + q * d.beta.value) + P * d.b.value + Q * d.sigma.value - c.value;
}

inline double hamiltonian(const Model& model, double t, double x, double a, const WeightedEnsemble& mu, double u,
                          double P, double Q, double p, double q) {
  return hamiltonian(model, t, x, a, model.summarize(mu), u, P, Q, p, q);
}

/// H_u = P b_u + Q sigma_u + A (p alpha_u + q beta_u) - f_u.
inline double hamiltonian_u(const Model& model, double t, double x, double a, const MeasureSummary& mu, double u,
                            double P, double Q, double p, double q) {
  const Dynamics d = model.dynamics(t, x, mu, u);
  const RunningCost c = model.running_cost(t, x, a, mu, u);
  return P * d.b.d_u + Q * d.sigma.d_u + a * (p * d.alpha.d_u + q * d.beta.d_u) - c.d_u;
}

inline double hamiltonian_u(const Model& model, double t, double x, double a, const WeightedEnsemble& mu, double u,
                            double P, double Q, double p, double q) {
  return hamiltonian_u(model, t, x, a, model.summarize(mu), u, P, Q, p, q);
}

/// Per-node E|H_u| along the path and its supremum over nodes 0..M-1.
struct SmpResidual {
  std::vector<Estimate> per_node;
  double sup = 0.0;
  std::size_t argsup = 0;
};

inline SmpResidual smp_residual(const Model& model, const EnsemblePath& path, const AdjointEnsemble& adj) {
  require(adj.grid == path.grid && !adj.P.empty() && adj.P.front().size() == path.particles(),
          "smp_residual: adjoint and path are not aligned");
  SmpResidual r;
  std::vector<double> buf(path.particles());
  for (std::size_t m = 0; m + 1 < path.nodes(); ++m) {
    const double t = path.grid.t(m);
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = std::abs(hamiltonian_u(model, t, path.x[m][i], path.a[m][i], path.summary[m], path.u[m][i],
                                      adj.P[m][i], adj.Q[m][i], adj.p[m][i], adj.q[m][i]));
    r.per_node.push_back(estimate(buf));
    if (r.per_node.back().value > r.sup) {
      r.sup = r.per_node.back().value;
      r.argsup = m;
    }
  }
  return r;
}

}  // namespace wmfc
