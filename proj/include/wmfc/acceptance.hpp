#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/lq_solver.hpp"
#include "wmfc/measures.hpp"
#include "wmfc/models/functional.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/models/smooth.hpp"
#include "wmfc/variation.hpp"

namespace wmfc::acceptance {

/// One pass/fail line: `measured` is compared with `threshold` under `relation` ("<=", "<", ">=").
struct CriterionResult {
  std::string group;
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation = "<=";
  bool passed = false;
  std::string detail;
};

inline const std::vector<std::string>& all_groups() {
  static const std::vector<std::string> g{"picard", "weight-moments", "variation-rate", "gateaux", "duality",
                                          "bsde",   "riccati",        "lq-pipeline",    "lambda-affinity",
                                          "bl-metric"};
  return g;
}

struct AcceptanceConfig {
  std::vector<std::string> groups = all_groups();
  std::uint64_t seed = 20240611;
  unsigned threads = 1;
  std::size_t particles = 10000;
  std::size_t steps = 100;
  std::size_t picard_particles = 2000;
  std::size_t picard_steps = 50;
  std::size_t riccati_steps = 1000;
  std::size_t panel_size = 20;
  std::optional<std::size_t> grid_override;  // replaces every step count above

  std::size_t m(std::size_t base) const { return grid_override.value_or(base); }

  void validate() const {
    require(!groups.empty(), "acceptance: empty criterion list");
    std::set<std::string> seen;
    for (const auto& g : groups) {
      require(std::find(all_groups().begin(), all_groups().end(), g) != all_groups().end(),
              "acceptance: unknown criterion '" + g + "'");
      require(seen.insert(g).second, "acceptance: duplicate criterion '" + g + "'");
    }
    require(particles >= 2 && picard_particles >= 2, "acceptance: need at least two particles");
    require(steps >= 1 && picard_steps >= 1 && riccati_steps >= 1, "acceptance: step counts must be positive");
    if (grid_override) require(*grid_override >= 1, "acceptance: grid override must be positive");
    require(panel_size >= 1, "acceptance: panel size must be positive");
  }
};

namespace detail {

inline CriterionResult row(std::string group, std::string name, double measured, std::string rel, double threshold,
                           std::string detail = {}) {
  bool ok = false;
  if (rel == "<=") ok = measured <= threshold;
  else if (rel == "<") ok = measured < threshold;
  else if (rel == ">=") ok = measured >= threshold;
  ok = ok && std::isfinite(measured);
  return {std::move(group), std::move(name), measured, threshold, std::move(rel), ok, std::move(detail)};
}

inline double z_score(double diff, double se) {
  if (se > 0.0) return std::abs(diff) / se;
  return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

inline void picard_checks(const Model& model, const std::string& label, const AcceptanceConfig& cfg,
                          std::vector<CriterionResult>& out) {
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.picard_steps)));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.picard_particles), cfg.seed, 1, cfg.threads);
  const ControlSpec ctrl = ControlSpec::constant(0.2, grid.nodes());
  const SimulationOptions so{cfg.threads};
  const std::string g = "picard";
  try {
    const PicardResult r1 = picard_solve(model, ctrl, 1.0, 1.0, noise, 1e-8, 15, std::nullopt, so);
    const PicardResult r2 = picard_solve(model, ctrl, 1.0, 1.0, noise, 1e-8, 15, PicardGuess{2.0, 2.0}, so);
    const auto& f = r1.report.residuals;  // f[n-1] is the n-th residual

    std::size_t violations = 0;
    for (std::size_t n = 2; n < f.size(); ++n)
      if (f[n] > f[n - 1]) ++violations;
    std::vector<double> xs, ys;
    for (std::size_t n = 1; n < f.size(); ++n)
      if (f[n] > 0.0) {
        xs.push_back(static_cast<double>(n + 1));
        ys.push_back(std::log(f[n]));
      }
    const double ratio = xs.size() >= 2 ? std::exp(fit_slope(xs, ys)) : 0.0;
    std::string hist;
    for (double v : f) hist += (hist.empty() ? "" : " ") + std::to_string(v);

    out.push_back(row(g, label + ": residual increases after n=2", static_cast<double>(violations), "<=", 0.0,
                      "residuals " + hist));
    out.push_back(row(g, label + ": fitted contraction ratio", ratio, "<", 1.0));
    out.push_back(row(g, label + ": iterations to residual < 1e-8", static_cast<double>(f.size()), "<=", 15.0,
                      "final residual " + std::to_string(f.back())));
    out.push_back(row(g, label + ": distance between limits from two guesses", mixed_distance(r1.path, r2.path),
                      "<=", 1e-6));
  } catch (const ConvergenceError& e) {
    out.push_back(row(g, label + ": iterations to residual < 1e-8", 16.0, "<=", 15.0, e.what()));
  }
}

/// k' = s k^2 - 2 rho k - L, k(T) = R with constant coefficients, solved in closed form.
inline double scalar_riccati_closed_form(double rho, double s, double L, double R, double T, double t) {
  if (s == 0.0) {
    if (rho == 0.0) return R + L * (T - t);
    const double e = std::exp(2.0 * rho * (T - t));
    return R * e + L * (e - 1.0) / (2.0 * rho);
  }
  const double disc = std::sqrt(rho * rho + s * L);
  const double kp = (rho + disc) / s, km = (rho - disc) / s;
  if (R == kp) return kp;
  const double d = kp - km;
  // y = k - kp satisfies y' = s y^2 + s d y; z = 1/y is linear.
  const double zT = 1.0 / (R - kp);
  const double z = -1.0 / d + (zT + 1.0 / d) * std::exp(s * d * (T - t));
  return kp + 1.0 / z;
}

/// x' = F x + G u, cost sum (Q x^2 + Rc u^2)/2 + S x_M^2 / 2; returns g_m with u_m = g_m x_m.
inline std::vector<double> scalar_lqr_gain(double F, double G, double Q, double Rc, double S, std::size_t steps) {
  std::vector<double> g(steps);
  double P = S;
  for (std::size_t m = steps; m-- > 0;) {
    g[m] = -G * P * F / (Rc + G * G * P);
    P = Q + F * F * P - (F * P * G) * (F * P * G) / (Rc + G * G * P);
  }
  return g;
}

/// Root of lambda -> E[X_T](lambda) - c0 by bracketing and bisection.
inline double bisect_lambda(const std::function<double(double)>& gap, double tol = 1e-12) {
  double lo = -1.0, hi = 1.0;
  double glo = gap(lo), ghi = gap(hi);
  for (int i = 0; i < 60 && glo * ghi > 0.0; ++i) {
    lo *= 2.0;
    hi *= 2.0;
    glo = gap(lo);
    ghi = gap(hi);
  }
  require(glo * ghi <= 0.0, "bisection: no sign change found");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = gap(mid);
    if ((gm <= 0.0) == (glo <= 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline void run_picard(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  detail::picard_checks(models::LqModel(models::LQScenario{}, 0.0), "lq", cfg, out);
  detail::picard_checks(models::SmoothTestModel{}, "smooth", cfg, out);
}

inline void run_weight_moments(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const double al = 0.05, be = 0.2, a0 = 1.0;
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.steps)));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 2, cfg.threads);
  const auto model = models::constant_model(0.0, 0.0, al, be);
  const EnsemblePath path = simulate(model, ControlSpec::constant(0.0, grid.nodes()), 0.0, a0, noise, {cfg.threads});
  const MomentReport rep = moment_report(path, {1.0, 2.0, 4.0});
  double worst = 0.0;
  std::string where;
  for (std::size_t k = 0; k < rep.exponents.size(); ++k) {
    const double p = rep.exponents[k];
    for (std::size_t m = 0; m < grid.nodes(); ++m) {
      const double t = grid.t(m);
      const double exact = std::pow(a0, p) * std::exp(p * al * t + 0.5 * p * (p - 1.0) * be * be * t);
      const double z = detail::z_score(rep.moments[k][m].value - exact, rep.moments[k][m].se);
      if (z > worst) {
        worst = z;
        where = "p=" + std::to_string(p) + " t=" + std::to_string(t);
      }
    }
  }
  out.push_back(detail::row("weight-moments", "max |E[A^p] - exact| / se over nodes, p in {1,2,4}", worst, "<=", 3.0,
                            where));
}

inline void run_variation_rate(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const models::SmoothTestModel model;
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.steps)));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 3, cfg.threads);
  const EnsemblePath path = simulate(model, ControlSpec::constant(0.2, grid.nodes()), 1.0, 1.0, noise, {cfg.threads});
  std::mt19937_64 rng(cfg.seed + 3);
  const OpenLoop v = lq::random_direction(grid, rng);
  const RateStudy rs = variation_rate_study(model, path, v, {0.1, 0.05, 0.025}, 1.0, 1.0, noise, {cfg.threads});
  out.push_back(detail::row("variation-rate", "log-log slope of state deviation in eps (smooth)", rs.slope, ">=", 1.9));
}

inline void run_gateaux(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.steps)));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 4, cfg.threads);
  auto check = [&](const Model& model, const std::string& label, double u0) {
    const EnsemblePath path = simulate(model, ControlSpec::constant(u0, grid.nodes()), 1.0, 1.0, noise, {cfg.threads});
    AdjointOptions ao;
    ao.threads = cfg.threads;
    const AdjointEnsemble adj = solve_adjoint(model, path, noise, ao);
    std::mt19937_64 rng(cfg.seed + 4);
    double z_fd = 0.0, z_h = 0.0;
    for (int k = 0; k < 5; ++k) {
      const OpenLoop v = lq::random_direction(grid, rng);
      const VariationEnsemble var = simulate_variation(model, path, v, noise, {KernelMode::Factorized, cfg.threads});
      const Estimate an = gateaux_analytic(model, path, var);
      const Estimate fd = gateaux_fd(model, path, v, {1e-3}, 1.0, 1.0, noise, {cfg.threads}).front().quotient;
      const Estimate vh = gateaux_via_hamiltonian(model, path, adj, v);
      z_fd = std::max(z_fd, detail::z_score(fd.value - an.value, combined_se(fd.se, an.se)));
      z_h = std::max(z_h, detail::z_score(an.value - vh.value, combined_se(an.se, vh.se)));
    }
    out.push_back(detail::row("gateaux", label + ": max |fd - analytic| / combined se, 5 directions", z_fd, "<=", 3.0));
    out.push_back(
        detail::row("gateaux", label + ": max |analytic - hamiltonian| / combined se, 5 directions", z_h, "<=", 3.0));
  };
  check(models::SmoothTestModel{}, "smooth", 0.2);
  check(models::LqModel(models::LQScenario{}, 0.0), "lq", 0.0);
}

inline void run_duality(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.steps)));
  {
    const models::SmoothTestModel model;
    const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 5, cfg.threads);
    const EnsemblePath path = simulate(model, ControlSpec::constant(0.2, grid.nodes()), 1.0, 1.0, noise, {cfg.threads});
    AdjointOptions ao;
    ao.threads = cfg.threads;
    const AdjointEnsemble adj = solve_adjoint(model, path, noise, ao);
    std::mt19937_64 rng(cfg.seed + 5);
    const VariationEnsemble var = simulate_variation(model, path, lq::random_direction(grid, rng), noise);
    const DualityResult d = duality_check(model, path, adj, var);
    out.push_back(detail::row("duality", "smooth: weight-side residual / combined se",
                              detail::z_score(d.p_residual(), d.p_se()), "<=", 3.0,
                              "residual " + std::to_string(d.p_residual())));
    out.push_back(detail::row("duality", "smooth: state-side residual / combined se",
                              detail::z_score(d.P_residual(), d.P_se()), "<=", 3.0,
                              "residual " + std::to_string(d.P_residual())));
  }
  {
    const auto model = models::decoupled_control_model();
    const NoiseBundle noise = sample_noise(grid, 200, cfg.seed, 6, cfg.threads);
    const EnsemblePath path = simulate(model, ControlSpec::constant(0.0, grid.nodes()), 1.0, 1.0, noise);
    const AdjointEnsemble adj = solve_adjoint(model, path, noise, {});
    std::mt19937_64 rng(cfg.seed + 6);
    const VariationEnsemble var = simulate_variation(model, path, lq::random_direction(grid, rng), noise);
    const DualityResult d = duality_check(model, path, adj, var);
    out.push_back(detail::row("duality", "decoupled instance: max |residual|",
                              std::max(std::abs(d.p_residual()), std::abs(d.P_residual())), "<=", 1e-12));
  }
}

inline void run_bsde(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.steps)));
  const NoiseBundle noise = sample_noise(grid, 1000, cfg.seed, 7, cfg.threads);
  for (bool weight : {false, true}) {
    const auto model = models::decoupled_linear_cost(weight);
    const EnsemblePath path = simulate(model, ControlSpec::constant(0.0, grid.nodes()), 1.0, 1.0, noise);
    const AdjointEnsemble adj = solve_adjoint(model, path, noise, {});
    const auto& Y = weight ? adj.p : adj.P;
    double err = 0.0;
    for (std::size_t m = 0; m < grid.nodes(); ++m)
      for (double v : Y[m]) err = std::max(err, std::abs(v + (grid.horizon() - grid.t(m))));
    out.push_back(detail::row("bsde", weight ? "f = a: max |p_t + (T - t)|" : "f = x: max |P_t + (T - t)|", err, "<=",
                              1e-3));
  }
}

inline void run_riccati(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  models::LQScenario sc;
  sc.rho = 0.0;
  sc.b = 1.0;
  sc.N = 1.0;
  sc.R = 1.0;
  sc.L = 0.0;
  sc.T = 1.0;
  const TimeGrid grid = build_grid(1.0, static_cast<long long>(cfg.m(cfg.riccati_steps)));
  const lq::RiccatiPath r = lq::solve_riccati(sc, grid);
  double err = 0.0;
  for (std::size_t m = 0; m < grid.nodes(); ++m) err = std::max(err, std::abs(r.phi[m] - 1.0 / (grid.t(m) - 2.0)));
  out.push_back(detail::row("riccati", "max |phi - 1/(t - 2)|", err, "<=", 1e-6));
}

inline void run_lq_pipeline(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const std::string g = "lq-pipeline";
  const models::LQScenario sc;
  const std::size_t M = cfg.m(cfg.steps);
  const TimeGrid grid = build_grid(sc.T, static_cast<long long>(M));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 8, cfg.threads);
  const lq::LqOptions lo;
  const lq::LqSolution sol = lq::solve_lq(sc, noise, lo);
  lq::VerifyOptions vo;
  vo.panel_size = cfg.panel_size;
  vo.panel_seed = cfg.seed + 8;
  vo.threads = cfg.threads;
  const lq::VerificationReport rep = lq::verify_optimality(sc, sol.lambda, lq::synthesize_feedback(sc, sol), noise, vo);

  out.push_back(detail::row(g, "|E[X_T] - c0| / se", detail::z_score(rep.EXT.value - sc.c0, rep.EXT.se), "<=", 3.0,
                            "E[X_T] = " + std::to_string(rep.EXT.value) + ", se " + std::to_string(rep.EXT.se)));

  const double lam_bis = detail::bisect_lambda([&](double lam) {
    return lq::predicted_terminal_mean(sc, sol.riccati, sol.weights, lam, lo) - sc.c0;
  });
  out.push_back(detail::row(g, "|lambda (affine) - lambda (bisection)|", std::abs(sol.lambda - lam_bis), "<=", 1e-8,
                            "lambda = " + std::to_string(sol.lambda)));

  out.push_back(detail::row(g, "sup-node E|H_u| at the synthesized control", rep.smp.sup, "<=", 5e-2));
  {
    const TimeGrid g2 = build_grid(sc.T, static_cast<long long>(2 * M));
    const NoiseBundle n2 = sample_noise(g2, static_cast<long long>(2 * cfg.particles), cfg.seed, 9, cfg.threads);
    const lq::LqSolution s2 = lq::solve_lq(sc, n2, lo);
    lq::VerifyOptions v2 = vo;
    v2.panel_size = 0;
    const lq::VerificationReport r2 = lq::verify_optimality(sc, s2.lambda, lq::synthesize_feedback(sc, s2), n2, v2);
    out.push_back(detail::row(g, "E|H_u| ratio after doubling N and M", r2.smp.sup / rep.smp.sup, "<", 1.0,
                              std::to_string(rep.smp.sup) + " -> " + std::to_string(r2.smp.sup)));
  }

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& e : rep.panel) worst = std::max(worst, -e.difference.value / e.difference.se);
  out.push_back(detail::row(g, "max (J(u*) - J(u* + eps v)) / se over the perturbation panel", worst, "<=", 3.0,
                            std::to_string(rep.panel.size()) + " entries"));

  models::LQScenario s0 = sc;
  s0.a = 0.0;
  const double bb = s0.b(0.0), rho = s0.rho(0.0);
  {
    // gain of the synthesized control on x against the textbook discrete-time LQR recursion
    const lq::LqSolution z = lq::solve_lq(s0, noise, lo);
    const Feedback fb = lq::synthesize_feedback(s0, z);
    const std::vector<double> gain = detail::scalar_lqr_gain(1.0 + rho * grid.dt(), bb * grid.dt(), s0.L * grid.dt(),
                                                             s0.N * grid.dt(), s0.R, grid.steps());
    const EnsembleStats st{};
    double gerr = 0.0;
    for (std::size_t m = 0; m < grid.steps(); ++m) {
      const double t = grid.t(m);
      const double g1 = fb.law(m, t, 1.0, sc.a0, st) - fb.law(m, t, 0.0, sc.a0, st);
      gerr = std::max(gerr, std::abs(g1 - gain[m]));
    }
    out.push_back(detail::row(g, "no-coupling synthesized gain vs discrete scalar LQ benchmark", gerr, "<=", 1e-4));
  }
  const lq::RiccatiPath r0 = lq::solve_riccati(s0, grid);
  const std::vector<double> gain = lq::feedback_gain(s0, r0);
  double gerr = 0.0;
  for (std::size_t m = 0; m < grid.nodes(); ++m) {
    const double k = detail::scalar_riccati_closed_form(rho, bb * bb / s0.N, s0.L, s0.R, s0.T, grid.t(m));
    gerr = std::max(gerr, std::abs(gain[m] - (-bb / s0.N * k)));
  }
  out.push_back(detail::row(g, "no-coupling continuous gain vs scalar LQ closed form", gerr, "<=", 1e-4));
}

inline void run_lambda_affinity(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  const std::string g = "lambda-affinity";
  const models::LQScenario sc;
  const TimeGrid grid = build_grid(sc.T, static_cast<long long>(cfg.m(cfg.steps)));
  const NoiseBundle noise = sample_noise(grid, static_cast<long long>(cfg.particles), cfg.seed, 10, cfg.threads);
  const lq::RiccatiPath ric = lq::solve_riccati(sc, grid);
  const lq::WeightPaths w = lq::simulate_weight_paths(sc, noise);
  const lq::LqOptions lo;

  std::vector<lq::CoefficientProcesses> cp;
  std::vector<lq::MomentPath> mp;
  std::vector<Estimate> ext;
  for (double lam : {0.0, 1.0, 2.0}) {
    Feedback fb;
    if (lo.scheme == lq::Scheme::Discrete) {
      const lq::DiscreteSolution ds = lq::solve_discrete(sc, lam, w, lo.coefficients);
      cp.push_back(ds.processes);
      mp.push_back(ds.moments);
      fb = lq::synthesize_feedback(sc, ds);
    } else {
      cp.push_back(lq::solve_coefficient_processes(sc, ric, lam, w, lo.coefficients));
      mp.push_back(lq::solve_moments(sc, ric, cp.back()));
      fb = lq::synthesize_feedback(sc, ric, cp.back(), mp.back());
    }
    const models::LqModel model(sc, lam);
    ext.push_back(estimate(simulate(model, ControlSpec(fb), sc.x0, sc.a0, noise, {cfg.threads}).x.back()));
  }
  auto dev = [](double q0, double q1, double q2) { return std::abs(q2 - 2.0 * q1 + q0); };

  double ode = 0.0;
  for (std::size_t m = 0; m < grid.nodes(); ++m) {
    ode = std::max(ode, dev(mp[0].EX[m], mp[1].EX[m], mp[2].EX[m]));
    ode = std::max(ode, dev(mp[0].EAX[m], mp[1].EAX[m], mp[2].EAX[m]));
  }
  out.push_back(detail::row(g, "moment paths: max three-point deviation", ode, "<=", 1e-8));

  // BSDE quantities: excess of the deviation over 3 se of the sample mean at lambda = 1.
  double worst = -std::numeric_limits<double>::infinity();
  auto se_of = [&](const std::vector<double>& v, const std::vector<double>* weight) {
    std::vector<double> s(v);
    if (weight)
      for (std::size_t i = 0; i < s.size(); ++i) s[i] *= (*weight)[i];
    return estimate(s).se;
  };
  for (std::size_t m = 0; m < grid.nodes(); ++m) {
    const std::vector<double>* A = &w.a[m];
    const std::pair<double, double> items[6] = {
        {dev(cp[0].E_varphi[m], cp[1].E_varphi[m], cp[2].E_varphi[m]), se_of(cp[1].varphi[m], nullptr)},
        {dev(cp[0].E_Avarphi[m], cp[1].E_Avarphi[m], cp[2].E_Avarphi[m]), se_of(cp[1].varphi[m], A)},
        {dev(cp[0].E_chi[m], cp[1].E_chi[m], cp[2].E_chi[m]), se_of(cp[1].chi[m], nullptr)},
        {dev(cp[0].E_Achi[m], cp[1].E_Achi[m], cp[2].E_Achi[m]), se_of(cp[1].chi[m], A)},
        {dev(cp[0].E_psi[m], cp[1].E_psi[m], cp[2].E_psi[m]), se_of(cp[1].psi[m], nullptr)},
        {dev(cp[0].E_Apsi[m], cp[1].E_Apsi[m], cp[2].E_Apsi[m]), se_of(cp[1].psi[m], A)}};
    for (const auto& [d, se] : items) worst = std::max(worst, d - 3.0 * se);
  }
  out.push_back(detail::row(g, "coefficient-process expectations: max (deviation - 3 se)", worst, "<=", 1e-12));

  const double dx = dev(ext[0].value, ext[1].value, ext[2].value);
  out.push_back(detail::row(g, "simulated E[X_T]: deviation / se", detail::z_score(dx, ext[1].se), "<=", 3.0));
  out.push_back(detail::row(g, "moment E[X_T]: three-point deviation",
                            dev(mp[0].EX.back(), mp[1].EX.back(), mp[2].EX.back()), "<=", 1e-8));
}

inline void run_bl_metric(const AcceptanceConfig& cfg, std::vector<CriterionResult>& out) {
  std::mt19937_64 rng(cfg.seed + 11);
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), wt(0.1, 2.0);
  auto draw = [&] {
    const int n = count(rng);
    std::vector<double> x(n), a(n);
    for (int i = 0; i < n; ++i) {
      x[i] = pos(rng);
      a[i] = wt(rng);
    }
    return WeightedEnsemble(std::move(x), std::move(a));
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const WeightedEnsemble e1 = draw(), e2 = draw();
    const double lp = bl_distance_lp(e1, e2);
    worst = std::max({worst, std::abs(bl_distance(e1, e2) - lp), std::abs(bl_distance_chain(e1, e2) - lp)});
  }
  out.push_back(detail::row("bl-metric", "max |bl_distance - LP| and |chain - LP| over 100 instances", worst, "<=",
                            1e-9));
}

inline std::vector<CriterionResult> run(const AcceptanceConfig& cfg,
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
  cfg.validate();
  std::vector<CriterionResult> out;
  using Fn = void (*)(const AcceptanceConfig&, std::vector<CriterionResult>&);
  const std::vector<std::pair<std::string, Fn>> table{
      {"picard", run_picard},           {"weight-moments", run_weight_moments},
      {"variation-rate", run_variation_rate}, {"gateaux", run_gateaux},
      {"duality", run_duality},         {"bsde", run_bsde},
      {"riccati", run_riccati},         {"lq-pipeline", run_lq_pipeline},
      {"lambda-affinity", run_lambda_affinity}, {"bl-metric", run_bl_metric}};
  for (const auto& [name, fn] : table) {
    if (std::find(cfg.groups.begin(), cfg.groups.end(), name) == cfg.groups.end()) continue;
    const std::size_t before = out.size();
    try {
      fn(cfg, out);
    } catch (const std::exception& e) {
      out.push_back({name, "aborted", std::nan(""), 0.0, "<=", false, e.what()});
    }
    if (on_result)
      for (std::size_t i = before; i < out.size(); ++i) on_result(out[i]);
  }
  return out;
}

inline bool all_passed(const std::vector<CriterionResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CriterionResult& r) { return r.passed; });
}

inline nlohmann::json to_json(const std::vector<CriterionResult>& rs) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rs)
    arr.push_back({{"criterion", r.group},
                   {"check", r.name},
                   {"measured", std::isfinite(r.measured) ? nlohmann::json(r.measured) : nlohmann::json(nullptr)},
                   {"relation", r.relation},
                   {"threshold", r.threshold},
                   {"passed", r.passed},
                   {"detail", r.detail}});
  return arr;
}

}  // namespace wmfc::acceptance
