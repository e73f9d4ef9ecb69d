#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"

namespace wmfc {

/// First-order variations (Y, B) of (X, A) in an open-loop direction v, with B = A * Btilde.
struct VariationEnsemble {
  TimeGrid grid;
  OpenLoop direction;
  std::vector<std::vector<double>> Y, B, Btilde;                 // [node][particle]
  std::vector<std::array<double, kMaxFeatures>> measure_delta;  // [step] variation of <mu, phi_k>
};

struct VariationOptions {
  KernelMode kernel_mode = KernelMode::Factorized;
  unsigned threads = 1;
};

namespace detail {

inline double direction_at(const OpenLoop& v, std::size_t m) {
  return v.values[std::min(m, v.values.size() - 1)];
}

inline double primed(const std::array<double, kMaxFeatures>& d_m, const std::array<double, kMaxFeatures>& delta,
                     std::size_t kf) {
  double s = 0.0;
  for (std::size_t k = 0; k < kf; ++k) s += d_m[k] * delta[k];
  return s;
}

}  // namespace detail

/// Euler scheme for the variational equations along the base path, driven by the same noise.
/// This is the pathwise derivative of the forward scheme in the direction v.
inline VariationEnsemble simulate_variation(const Model& model, const EnsemblePath& path, const OpenLoop& v,
                                            const NoiseBundle& noise, const VariationOptions& opt = {}) {
  path.check_aligned(noise);
  require(!v.values.empty() && v.values.size() >= path.grid.steps(), "variation: direction must cover every step");
  const std::size_t n = path.particles();
  const std::size_t steps = path.grid.steps();
  const std::size_t kf = model.feature_count();
  const double dt = path.grid.dt();

  VariationEnsemble var{path.grid, v, {}, {}, {}, {}};
  var.Y.assign(path.nodes(), std::vector<double>(n, 0.0));
  var.B.assign(path.nodes(), std::vector<double>(n, 0.0));
  var.Btilde.assign(path.nodes(), std::vector<double>(n, 0.0));
  var.measure_delta.resize(steps);

  for (std::size_t m = 0; m < steps; ++m) {
    const auto& x = path.x[m];
    const auto& a = path.a[m];
    const auto& Y = var.Y[m];
    const auto& B = var.B[m];
    // delta <mu, phi_k> = E[B phi_k(X) + A phi_k'(X) Y]
    std::array<double, kMaxFeatures> delta{};
    for (std::size_t k = 0; k < kf; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += B[j] * model.feature(k, x[j]) + a[j] * model.feature_dx(k, x[j]) * Y[j];
      delta[k] = s / static_cast<double>(n);
    }
    var.measure_delta[m] = delta;

    const NodeEval ev = evaluate_node(model, path, m, opt.threads);
    const double vm = detail::direction_at(v, m);
    parallel_for(n, opt.threads, [&](std::size_t i) {
      const Dynamics& d = ev.dyn[i];
      const Jet at = log_weight_drift(d);
      double mb, ms, ma, mbe;
      if (opt.kernel_mode == KernelMode::Factorized) {
        mb = detail::primed(d.b.d_m, delta, kf);
        ms = detail::primed(d.sigma.d_m, delta, kf);
        ma = detail::primed(at.d_m, delta, kf);
        mbe = detail::primed(d.beta.d_m, delta, kf);
      } else {
        mb = ms = ma = mbe = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double xj = x[j];
          mb += B[j] * model.kernel(d.b.d_m, xj) + a[j] * model.kernel_dx(d.b.d_m, xj) * Y[j];
          ms += B[j] * model.kernel(d.sigma.d_m, xj) + a[j] * model.kernel_dx(d.sigma.d_m, xj) * Y[j];
          ma += B[j] * model.kernel(at.d_m, xj) + a[j] * model.kernel_dx(at.d_m, xj) * Y[j];
          mbe += B[j] * model.kernel(d.beta.d_m, xj) + a[j] * model.kernel_dx(d.beta.d_m, xj) * Y[j];
        }
        const double nn = static_cast<double>(n);
        mb /= nn;
        ms /= nn;
        ma /= nn;
        mbe /= nn;
      }
      const double dw = noise.dw(i, m);
      const double y = Y[i];
      var.Y[m + 1][i] = y + (d.b.d_x * y + d.b.d_u * vm + mb) * dt + (d.sigma.d_x * y + d.sigma.d_u * vm + ms) * dw;
      var.Btilde[m + 1][i] = var.Btilde[m][i] + (at.d_x * y + at.d_u * vm + ma) * dt +
                             (d.beta.d_x * y + d.beta.d_u * vm + mbe) * dw;
      var.B[m + 1][i] = path.a[m + 1][i] * var.Btilde[m + 1][i];
    });
  }
  return var;
}

/// Directional derivative of J from the variations:
/// E sum dt [f_x Y + f_a B + E'(B' f_mu + A' f_mu1 Y') + f_u v] + E[Phi_x Y_T + Phi_a B_T].
inline Estimate gateaux_analytic(const Model& model, const EnsemblePath& path, const VariationEnsemble& var) {
  require(var.grid == path.grid && var.Y.front().size() == path.particles(), "gateaux_analytic: inputs not aligned");
  const std::size_t n = path.particles();
  const std::size_t kf = model.feature_count();
  const double dt = path.grid.dt();
  std::vector<double> c(n, 0.0);
  for (std::size_t m = 0; m + 1 < path.nodes(); ++m) {
    const double t = path.grid.t(m);
    const double vm = detail::direction_at(var.direction, m);
    for (std::size_t i = 0; i < n; ++i) {
      const RunningCost f = model.running_cost(t, path.x[m][i], path.a[m][i], path.summary[m], path.u[m][i]);
      c[i] += (f.d_x * var.Y[m][i] + f.d_a * var.B[m][i] + detail::primed(f.d_m, var.measure_delta[m], kf) +
               f.d_u * vm) *
              dt;
    }
  }
  const std::size_t last = path.nodes() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const TerminalCost g = model.terminal_cost(path.x[last][i], path.a[last][i]);
    c[i] += g.d_x * var.Y[last][i] + g.d_a * var.B[last][i];
  }
  return estimate(c);
}

/// One row of a finite-difference study.
struct GateauxQuotient {
  double epsilon = 0.0;
  Estimate quotient;
};

/// eps^-1 (J(u + eps v) - J(u)) with the same noise for every evaluation; u is the control
/// process realized on `path`.
inline std::vector<GateauxQuotient> gateaux_fd(const Model& model, const EnsemblePath& path, const OpenLoop& v,
                                               const std::vector<double>& epsilons, double x0, double a0,
                                               const NoiseBundle& noise, const SimulationOptions& opt = {}) {
  path.check_aligned(noise);
  require(!epsilons.empty(), "gateaux_fd: empty epsilon list");
  require(v.values.size() >= path.grid.steps(), "gateaux_fd: direction must cover every step");
  const ProcessControl base = path.realized_control();
  const ControlDomain dom = model.domain();
  const double emax = *std::max_element(epsilons.begin(), epsilons.end());
  for (double e : epsilons) require(e > 0.0, "gateaux_fd: epsilons must be positive");
  for (std::size_t m = 0; m < path.grid.steps(); ++m)
    for (double u : base.values[m]) {
      const double up = u + emax * detail::direction_at(v, m);
      require(dom.contains(up), "gateaux_fd: u + eps v leaves the control domain");
    }

  const std::vector<double> j0 = cost_samples(path, model);
  std::vector<GateauxQuotient> out;
  std::vector<double> diff(j0.size());
  for (double e : epsilons) {
    const EnsemblePath pe = simulate(model, ControlSpec(perturb(base, v, e)), x0, a0, noise, opt);
    const std::vector<double> je = cost_samples(pe, model);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = (je[i] - j0[i]) / e;
    out.push_back({e, estimate(diff)});
  }
  return out;
}

/// Two-point Richardson extrapolation of quotients taken at eps and eps / 2.
inline double richardson(double q_eps, double q_half) { return 2.0 * q_half - q_eps; }

/// H_u with continuation values at node m for particle i.
inline double hamiltonian_u_continuation(const Model& model, const EnsemblePath& path, const AdjointEnsemble& adj,
                                         std::size_t m, std::size_t i) {
  return hamiltonian_u(model, path.grid.t(m), path.x[m][i], path.a[m][i], path.summary[m], path.u[m][i],
                       adj.P_cont[m][i], adj.Q[m][i], adj.p_cont[m][i], adj.q[m][i]);
}

/// -E sum dt v H_u along the path.
inline Estimate gateaux_via_hamiltonian(const Model& model, const EnsemblePath& path, const AdjointEnsemble& adj,
                                        const OpenLoop& v) {
  require(adj.grid == path.grid && adj.P.front().size() == path.particles(), "gateaux_via_hamiltonian: not aligned");
  require(v.values.size() >= path.grid.steps(), "gateaux_via_hamiltonian: direction must cover every step");
  const double dt = path.grid.dt();
  std::vector<double> c(path.particles(), 0.0);
  for (std::size_t m = 0; m + 1 < path.nodes(); ++m) {
    const double vm = detail::direction_at(v, m);
    if (vm == 0.0) continue;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= vm * hamiltonian_u_continuation(model, path, adj, m, i) * dt;
  }
  return estimate(c);
}

/// Both sides of the two Ito-product identities used to pass from the variations to H_u.
struct DualityResult {
  Estimate p_terminal;   // -E[Phi_a B_T]
  Estimate p_integral;
  Estimate P_terminal;   // -E[Phi_x Y_T]
  Estimate P_integral;

  double p_residual() const { return p_terminal.value - p_integral.value; }
  double P_residual() const { return P_terminal.value - P_integral.value; }
  double p_se() const { return combined_se(p_terminal.se, p_integral.se); }
  double P_se() const { return combined_se(P_terminal.se, P_integral.se); }
};

inline DualityResult duality_check(const Model& model, const EnsemblePath& path, const AdjointEnsemble& adj,
                                   const VariationEnsemble& var) {
  require(adj.grid == path.grid && var.grid == path.grid, "duality_check: grids differ");
  const std::size_t n = path.particles();
  const std::size_t kf = model.feature_count();
  const double dt = path.grid.dt();
  std::vector<double> lp(n), rp(n, 0.0), lP(n), rP(n, 0.0);
  for (std::size_t m = 0; m + 1 < path.nodes(); ++m) {
    const NodeEval ev = evaluate_node(model, path, m);
    const auto& delta = var.measure_delta[m];
    const double vm = detail::direction_at(var.direction, m);
    for (std::size_t i = 0; i < n; ++i) {
      const Dynamics& d = ev.dyn[i];
      const double a = path.a[m][i], Y = var.Y[m][i], B = var.B[m][i];
      const double p = adj.p_cont[m][i], q = adj.q[m][i], P = adj.P_cont[m][i], Q = adj.Q[m][i];
      rp[i] += (p * (a * d.alpha.d_x * Y + a * d.alpha.d_u * vm + B * d.alpha.value) +
                p * a * detail::primed(d.alpha.d_m, delta, kf) + B * adj.g[m][i] +
                q * (a * (d.beta.d_x * Y + d.beta.d_u * vm) + B * d.beta.value) +
                q * a * detail::primed(d.beta.d_m, delta, kf)) *
               dt;
      rP[i] += (P * (d.b.d_x * Y + d.b.d_u * vm) + Q * (d.sigma.d_x * Y + d.sigma.d_u * vm) + Y * adj.G[m][i] +
                P * detail::primed(d.b.d_m, delta, kf) + Q * detail::primed(d.sigma.d_m, delta, kf)) *
               dt;
    }
  }
  const std::size_t last = path.nodes() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const TerminalCost g = model.terminal_cost(path.x[last][i], path.a[last][i]);
    lp[i] = -g.d_a * var.B[last][i];
    lP[i] = -g.d_x * var.Y[last][i];
  }
  return {estimate(lp), estimate(rp), estimate(lP), estimate(rP)};
}

/// Deviation sup_m [E|X^eps - X|^2 + (E|A^eps - A|)^2] for each eps, with common noise.
struct RateStudy {
  std::vector<double> epsilons;
  std::vector<double> deviations;
  double slope = 0.0;  // log-log slope of deviation against eps
};

inline RateStudy variation_rate_study(const Model& model, const EnsemblePath& path, const OpenLoop& v,
                                      const std::vector<double>& epsilons, double x0, double a0,
                                      const NoiseBundle& noise, const SimulationOptions& opt = {}) {
  path.check_aligned(noise);
  require(epsilons.size() >= 2, "rate study: need at least two epsilons");
  RateStudy rs;
  const ProcessControl base = path.realized_control();
  const double nn = static_cast<double>(path.particles());
  std::vector<double> lx, ly;
  for (double e : epsilons) {
    const EnsemblePath pe = simulate(model, ControlSpec(perturb(base, v, e)), x0, a0, noise, opt);
    double dev = 0.0;
    for (std::size_t m = 0; m < path.nodes(); ++m) {
      double sx = 0.0, sa = 0.0;
      for (std::size_t i = 0; i < path.particles(); ++i) {
        const double dx = pe.x[m][i] - path.x[m][i];
        sx += dx * dx;
        sa += std::abs(pe.a[m][i] - path.a[m][i]);
      }
      dev = std::max(dev, sx / nn + (sa / nn) * (sa / nn));
    }
    rs.epsilons.push_back(e);
    rs.deviations.push_back(dev);
    lx.push_back(std::log(e));
    ly.push_back(std::log(dev));
  }
  rs.slope = fit_slope(lx, ly);
  return rs;
}

}  // namespace wmfc
