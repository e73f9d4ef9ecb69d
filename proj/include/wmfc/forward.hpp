#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "wmfc/control.hpp"
#include "wmfc/grid.hpp"
#include "wmfc/model.hpp"
#include "wmfc/parallel.hpp"
#include "wmfc/stats.hpp"

namespace wmfc {

/// Particle trajectories of (X, A) on every grid node, with the realized controls.
struct EnsemblePath {
  TimeGrid grid;
  std::vector<std::vector<double>> x;        // [node][particle]
  std::vector<std::vector<double>> a;        // [node][particle]
  std::vector<std::vector<double>> u;        // [step][particle], steps 0..M-1
  std::vector<MeasureSummary> summary;       // model measure coordinates per node
  std::vector<EnsembleStats> stats;          // per node
  std::uint64_t noise_seed = 0;
  std::uint64_t noise_stream = 0;
  std::size_t clipped = 0;                   // control values clipped into U

  std::size_t particles() const noexcept { return x.empty() ? 0 : x.front().size(); }
  std::size_t nodes() const noexcept { return x.size(); }

  WeightedEnsemble ensemble(std::size_t m) const { return WeightedEnsemble(x[m], a[m], m); }

  /// The control actually applied, as an adapted process sample.
  ProcessControl realized_control() const { return ProcessControl{u}; }

  void check_aligned(const NoiseBundle& noise) const {
    require(grid == noise.grid(), "path and noise use different grids");
    require(particles() == noise.particles(), "path and noise have different particle counts");
    require(noise_seed == noise.seed() && noise_stream == noise.stream(), "path was simulated with different noise");
  }
};

struct SimulationOptions {
  unsigned threads = 1;
};

/// Frozen measure flow: model coordinates and feedback statistics per node.
struct MeasureFlow {
  std::vector<MeasureSummary> summary;
  std::vector<EnsembleStats> stats;
};

namespace detail {

inline void finalize_node(const Model& model, EnsemblePath& path, std::size_t m) {
  path.summary[m] = model.summarize(path.x[m], path.a[m]);
  path.stats[m] = ensemble_stats(path.x[m], path.a[m]);
}

/// Euler-Maruyama for X and log-Euler for A. With `frozen` the measure at each node is taken
/// from the given flow instead of the current particles.
inline EnsemblePath run_forward(const Model& model, const ControlSpec& ctrl, double x0, double a0,
                                const NoiseBundle& noise, const MeasureFlow* frozen,
                                const SimulationOptions& opt) {
  require(std::isfinite(x0), "simulate: x0 must be finite");
  require(std::isfinite(a0) && a0 > 0.0, "simulate: a0 must be positive");
  const TimeGrid& grid = noise.grid();
  const std::size_t n = noise.particles();
  const std::size_t steps = grid.steps();
  ctrl.check_shape(grid.nodes(), n);
  if (frozen)
    require(frozen->summary.size() == grid.nodes() && frozen->stats.size() == grid.nodes(),
            "simulate: frozen flow does not match the grid");

  EnsemblePath path{grid, {}, {}, {}, {}, {}, noise.seed(), noise.stream(), 0};
  path.x.assign(grid.nodes(), std::vector<double>(n));
  path.a.assign(grid.nodes(), std::vector<double>(n));
  path.u.assign(steps, std::vector<double>(n));
  path.summary.resize(grid.nodes());
  path.stats.resize(grid.nodes());
  std::fill(path.x[0].begin(), path.x[0].end(), x0);
  std::fill(path.a[0].begin(), path.a[0].end(), a0);

  const ControlDomain dom = model.domain();
  const double dt = grid.dt();
  std::vector<unsigned char> clipped(n);
  for (std::size_t m = 0; m < steps; ++m) {
    detail::finalize_node(model, path, m);
    const MeasureSummary& mu = frozen ? frozen->summary[m] : path.summary[m];
    const EnsembleStats& st = frozen ? frozen->stats[m] : path.stats[m];
    const double t = grid.t(m);
    const auto& xm = path.x[m];
    const auto& am = path.a[m];
    auto& xn = path.x[m + 1];
    auto& an = path.a[m + 1];
    auto& um = path.u[m];
    parallel_for(n, opt.threads, [&](std::size_t i) {
      const double raw = ctrl.value(m, i, t, xm[i], am[i], st);
      const double u = dom.clip(raw);
      clipped[i] = u != raw;
      um[i] = u;
      const Dynamics d = model.dynamics(t, xm[i], mu, u);
      const double dw = noise.dw(i, m);
      xn[i] = xm[i] + d.b.value * dt + d.sigma.value * dw;
      const double be = d.beta.value;
      an[i] = am[i] * std::exp((d.alpha.value - 0.5 * be * be) * dt + be * dw);
    });
    for (std::size_t i = 0; i < n; ++i) {
      path.clipped += clipped[i];
      if (!std::isfinite(xn[i]) || !std::isfinite(an[i]) || !(an[i] > 0.0) || !std::isfinite(um[i]))
        throw NumericalError("simulate: non-finite state", m);
    }
  }
  detail::finalize_node(model, path, steps);
  return path;
}

}  // namespace detail

/// Interacting particle scheme: each step uses the current empirical weighted measure.
inline EnsemblePath simulate(const Model& model, const ControlSpec& ctrl, double x0, double a0,
                             const NoiseBundle& noise, const SimulationOptions& opt = {}) {
  return detail::run_forward(model, ctrl, x0, a0, noise, nullptr, opt);
}

/// Same scheme with the measure flow held fixed.
inline EnsemblePath simulate_frozen(const Model& model, const ControlSpec& ctrl, double x0, double a0,
                                    const NoiseBundle& noise, const MeasureFlow& flow,
                                    const SimulationOptions& opt = {}) {
  return detail::run_forward(model, ctrl, x0, a0, noise, &flow, opt);
}

inline MeasureFlow flow_of(const EnsemblePath& path) { return {path.summary, path.stats}; }

/// E sup_m |X1 - X2|^2 + (E sup_m |A1 - A2|)^2 between two aligned paths.
inline double mixed_distance(const EnsemblePath& p1, const EnsemblePath& p2) {
  require(p1.nodes() == p2.nodes() && p1.particles() == p2.particles(), "mixed_distance: paths not aligned");
  const std::size_t n = p1.particles();
  double sx = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = 0.0, ma = 0.0;
    for (std::size_t m = 0; m < p1.nodes(); ++m) {
      mx = std::max(mx, std::abs(p1.x[m][i] - p2.x[m][i]));
      ma = std::max(ma, std::abs(p1.a[m][i] - p2.a[m][i]));
    }
    sx += mx * mx;
    sa += ma;
  }
  const double nn = static_cast<double>(n);
  return sx / nn + (sa / nn) * (sa / nn);
}

/// Starting iterate of the Picard scheme: every particle frozen at (x, a) on every node.
struct PicardGuess {
  double x = 0.0;
  double a = 1.0;
};

struct PicardReport {
  std::vector<double> residuals;  // residuals[n] compares iterate n+1 with iterate n
  std::size_t iterations = 0;     // index of the first residual below tolerance
  bool converged = false;
};

struct PicardResult {
  EnsemblePath path;
  PicardReport report;
};

/// Fixed-point iteration on the measure flow: simulate against the frozen flow of the previous
/// iterate, recompute the flow, repeat until the mixed residual drops below tol.
inline PicardResult picard_solve(const Model& model, const ControlSpec& ctrl, double x0, double a0,
                                 const NoiseBundle& noise, double tol, std::size_t max_iter,
                                 std::optional<PicardGuess> guess = std::nullopt,
                                 const SimulationOptions& opt = {}) {
  require(tol > 0.0, "picard: tolerance must be positive");
  require(max_iter >= 1, "picard: max_iter must be at least 1");
  const PicardGuess g = guess.value_or(PicardGuess{x0, a0});
  require(g.a > 0.0, "picard: initial weight guess must be positive");
  const TimeGrid& grid = noise.grid();
  const std::size_t n = noise.particles();

  EnsemblePath prev{grid, {}, {}, {}, {}, {}, noise.seed(), noise.stream(), 0};
  prev.x.assign(grid.nodes(), std::vector<double>(n, g.x));
  prev.a.assign(grid.nodes(), std::vector<double>(n, g.a));
  prev.u.assign(grid.steps(), std::vector<double>(n, 0.0));
  prev.summary.resize(grid.nodes());
  prev.stats.resize(grid.nodes());
  for (std::size_t m = 0; m < grid.nodes(); ++m) detail::finalize_node(model, prev, m);

  PicardReport rep;
  for (std::size_t it = 0; it <= max_iter; ++it) {
    EnsemblePath next = simulate_frozen(model, ctrl, x0, a0, noise, flow_of(prev), opt);
    const double r = mixed_distance(next, prev);
    rep.residuals.push_back(r);
    prev = std::move(next);
    if (r < tol) {
      rep.iterations = it;
      rep.converged = true;
      return {std::move(prev), std::move(rep)};
    }
  }
  std::string hist;
  for (double r : rep.residuals) hist += " " + std::to_string(r);
  throw ConvergenceError("picard: no convergence within " + std::to_string(max_iter) +
                         " iterations; residuals:" + hist);
}

/// Empirical E[A_t^p] with standard errors, per node, for each exponent.
struct MomentReport {
  std::vector<double> exponents;
  std::vector<std::vector<Estimate>> moments;  // [exponent][node]
  std::vector<double> maxima;                  // sup over nodes per exponent
};

inline MomentReport moment_report(const EnsemblePath& path, const std::vector<double>& exponents) {
  require(path.nodes() > 0, "moment_report: empty path");
  MomentReport rep;
  rep.exponents = exponents;
  std::vector<double> buf(path.particles());
  for (double p : exponents) {
    require(p >= 1.0, "moment_report: exponents must be >= 1");
    std::vector<Estimate> row;
    double mx = 0.0;
    for (std::size_t m = 0; m < path.nodes(); ++m) {
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::pow(path.a[m][i], p);
      row.push_back(estimate(buf));
      mx = std::max(mx, row.back().value);
    }
    rep.moments.push_back(std::move(row));
    rep.maxima.push_back(mx);
  }
  return rep;
}

/// Per-particle cost sum_m f dt + Phi(X_T, A_T) (left-endpoint rule).
inline std::vector<double> cost_samples(const EnsemblePath& path, const Model& model) {
  const std::size_t n = path.particles();
  const double dt = path.grid.dt();
  std::vector<double> c(n, 0.0);
  for (std::size_t m = 0; m + 1 < path.nodes(); ++m) {
    const double t = path.grid.t(m);
    for (std::size_t i = 0; i < n; ++i)
      c[i] += model.running_cost(t, path.x[m][i], path.a[m][i], path.summary[m], path.u[m][i]).value * dt;
  }
  const std::size_t last = path.nodes() - 1;
  for (std::size_t i = 0; i < n; ++i) c[i] += model.terminal_cost(path.x[last][i], path.a[last][i]).value;
  return c;
}

/// Monte Carlo estimate of J = E[int f dt + Phi(X_T, A_T)] along a simulated path.
inline Estimate evaluate_cost(const EnsemblePath& path, const Model& model) {
  return estimate(cost_samples(path, model));
}

}  // namespace wmfc
