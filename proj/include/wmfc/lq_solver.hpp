#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/regression.hpp"

namespace wmfc::lq {

using models::LQScenario;

/// Raised when the control cannot move E[X_T], so no multiplier meets the terminal constraint.
class UnreachableConstraint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic Riccati solution phi on the grid.
struct RiccatiPath {
  TimeGrid grid;
  std::vector<double> phi;
};

/// dphi/dt = -2 rho phi - N^-1 b^2 phi^2 + L, phi(T) = -R, integrated backward with RK4.
inline RiccatiPath solve_riccati(const LQScenario& sc, const TimeGrid& grid, double blowup_cap = 1e8) {
  sc.validate();
  require(std::abs(grid.horizon() - sc.T) <= 1e-12 * sc.T, "riccati: grid horizon differs from scenario T");
  require(blowup_cap > 0.0, "riccati: blow-up cap must be positive");
  auto rhs = [&](double t, double p) {
    const double b = sc.b(t);
    return -2.0 * sc.rho(t) * p - b * b / sc.N * p * p + sc.L;
  };
  RiccatiPath r{grid, std::vector<double>(grid.nodes())};
  r.phi.back() = -sc.R;
  for (std::size_t m = grid.steps(); m-- > 0;) {
    const double t1 = grid.t(m + 1);
    const double h = -(t1 - grid.t(m));
    const double y = r.phi[m + 1];
    const double k1 = rhs(t1, y);
    const double k2 = rhs(t1 + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = rhs(t1 + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = rhs(t1 + h, y + h * k3);
    const double next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(next) || std::abs(next) > blowup_cap)
      throw NumericalError("riccati: blow-up at t = " + std::to_string(grid.t(m)), m);
    r.phi[m] = next;
  }
  return r;
}

/// Weight paths A[node][particle], log-Euler with the scenario's alpha, beta on the given noise.
struct WeightPaths {
  TimeGrid grid;
  std::vector<std::vector<double>> a;
};

inline WeightPaths simulate_weight_paths(const LQScenario& sc, const NoiseBundle& noise) {
  const TimeGrid& g = noise.grid();
  const std::size_t n = noise.particles();
  WeightPaths w{g, std::vector<std::vector<double>>(g.nodes(), std::vector<double>(n, sc.a0))};
  const double dt = g.dt();
  for (std::size_t m = 0; m < g.steps(); ++m) {
    const double t = g.t(m);
    const double al = sc.alpha(t), be = sc.beta(t);
    for (std::size_t i = 0; i < n; ++i)
      w.a[m + 1][i] = w.a[m][i] * std::exp((al - 0.5 * be * be) * dt + be * noise.dw(i, m));
  }
  return w;
}

/// The ansatz processes (varphi, chi, psi) as functions of A_t, with their expectations.
struct CoefficientProcesses {
  TimeGrid grid;
  double lambda = 0.0;
  std::vector<double> E_varphi, E_Avarphi, E_chi, E_Achi, E_psi, E_Apsi;  // [node]
  std::vector<std::vector<double>> varphi, chi, psi;                      // [node][particle]
  std::vector<PolynomialFit> fits;  // [step]; responses (varphi, chi, psi) on A_m
  std::size_t fallbacks = 0;
  std::vector<std::string> warnings;

  enum Column : Eigen::Index { Varphi = 0, Chi = 1, Psi = 2 };

  /// Regression value of one process at node m for weight a.
  double value(Column c, std::size_t m, double a) const {
    if (m + 1 >= grid.nodes()) return c == Psi ? psi.back().front() : 0.0;
    return fits[m].predict(std::span<const double>(&a, 1), c);
  }
};

struct CoefficientOptions {
  int basis_degree = 2;
};

namespace detail {

inline void expectations(CoefficientProcesses& cp, const WeightPaths& w, std::size_t m) {
  const auto& a = w.a[m];
  const double n = static_cast<double>(a.size());
  double s[6] = {};
  for (std::size_t i = 0; i < a.size(); ++i) {
    s[0] += cp.varphi[m][i];
    s[1] += a[i] * cp.varphi[m][i];
    s[2] += cp.chi[m][i];
    s[3] += a[i] * cp.chi[m][i];
    s[4] += cp.psi[m][i];
    s[5] += a[i] * cp.psi[m][i];
  }
  cp.E_varphi[m] = s[0] / n;
  cp.E_Avarphi[m] = s[1] / n;
  cp.E_chi[m] = s[2] / n;
  cp.E_Achi[m] = s[3] / n;
  cp.E_psi[m] = s[4] / n;
  cp.E_Apsi[m] = s[5] / n;
}

}  // namespace detail

/// Backward least-squares Monte Carlo for the three linear BSDEs of the ansatz, regressing on A.
/// Drivers are evaluated explicitly at the later node with empirical expectations there.
inline CoefficientProcesses solve_coefficient_processes(const LQScenario& sc, const RiccatiPath& ric, double lambda,
                                                        const WeightPaths& w, const CoefficientOptions& opt = {}) {
  require(ric.grid == w.grid, "coefficient processes: Riccati and weight paths use different grids");
  require(!w.a.empty() && !w.a.front().empty(), "coefficient processes: no weight samples");
  require(std::isfinite(lambda), "coefficient processes: lambda must be finite");
  const TimeGrid& g = w.grid;
  const std::size_t nodes = g.nodes();
  const std::size_t n = w.a.front().size();
  const double dt = g.dt();

  CoefficientProcesses cp;
  cp.grid = g;
  cp.lambda = lambda;
  for (auto* v : {&cp.E_varphi, &cp.E_Avarphi, &cp.E_chi, &cp.E_Achi, &cp.E_psi, &cp.E_Apsi}) v->assign(nodes, 0.0);
  cp.varphi.assign(nodes, std::vector<double>(n, 0.0));
  cp.chi.assign(nodes, std::vector<double>(n, 0.0));
  cp.psi.assign(nodes, std::vector<double>(n, 0.0));
  cp.fits.resize(g.steps());
  std::fill(cp.psi.back().begin(), cp.psi.back().end(), sc.R * sc.c0 - lambda);
  detail::expectations(cp, w, nodes - 1);

  Eigen::MatrixXd resp(static_cast<Eigen::Index>(n), 3);
  for (std::size_t m = g.steps(); m-- > 0;) {
    const std::size_t l = m + 1;
    const double t = g.t(l);
    const double rho = sc.rho(t), ac = sc.a(t), b = sc.b(t), c = sc.c(t);
    const double al = sc.alpha(t), be = sc.beta(t);
    const double k = b * b / sc.N;
    const double ph = ric.phi[l];
    const double EA = sc.expected_weight(t);
    const double Ev = cp.E_varphi[l], EAv = cp.E_Avarphi[l], Ec = cp.E_chi[l], EAc = cp.E_Achi[l];
    const double Ep = cp.E_psi[l], EAp = cp.E_Apsi[l];
    for (std::size_t i = 0; i < n; ++i) {
      const double A = w.a[l][i];
      const double v = cp.varphi[l][i], x = cp.chi[l][i], p = cp.psi[l][i];
      const double gv = -((2.0 * rho + 2.0 * k * ph + k * Ev) * v + ac * A * Ev + k * EAv * x + ac * ph * A);
      const double gc = -((2.0 * rho + 2.0 * k * ph + al + ac * EA + k * EAc) * x + ac * A * Ec +
                          (ac + k * Ec) * v + ac * ph);
      const double gp = -((rho + k * ph) * p + ac * A * Ep + k * Ep * v + (be * c * EA + k * EAp) * x);
      const auto r = static_cast<Eigen::Index>(i);
      resp(r, 0) = v - gv * dt;
      resp(r, 1) = x - gc * dt;
      resp(r, 2) = p - gp * dt;
    }
    cp.fits[m] = PolynomialFit::fit({std::span<const double>(w.a[m])}, opt.basis_degree, resp);
    if (m > 0 && cp.fits[m].fallbacks() > 0) {
      cp.fallbacks += static_cast<std::size_t>(cp.fits[m].fallbacks());
      cp.warnings.push_back("coefficient processes: regression degree lowered at node " + std::to_string(m));
    }
    const Eigen::MatrixXd& f = cp.fits[m].fitted();
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      cp.varphi[m][i] = f(r, 0);
      cp.chi[m][i] = f(r, 1);
      cp.psi[m][i] = f(r, 2);
    }
    detail::expectations(cp, w, m);
  }
  return cp;
}

/// M(t) = (E[X_t], E[A_t X_t]).
struct MomentPath {
  TimeGrid grid;
  std::vector<double> EX, EAX;
};

/// Moment system
///   EX'  = xi1 EX + xi2 EAX + k E[psi]
///   EAX' = eta1 EX + eta2 EAX + k E[A psi] + beta c E[A]
/// RK4 with node coefficients interpolated linearly in time.
inline MomentPath solve_moments(const LQScenario& sc, const RiccatiPath& ric, const CoefficientProcesses& cp) {
  require(ric.grid == cp.grid, "moments: Riccati and processes use different grids");
  const TimeGrid& g = cp.grid;
  MomentPath mp{g, std::vector<double>(g.nodes()), std::vector<double>(g.nodes())};
  mp.EX[0] = sc.x0;
  mp.EAX[0] = sc.a0 * sc.x0;

  struct Coef {
    double xi1, xi2, eta1, eta2, f1, f2;
  };
  auto node_coef = [&](std::size_t m) {
    const double t = g.t(m);
    const double b = sc.b(t), k = b * b / sc.N;
    const double rho = sc.rho(t), ac = sc.a(t), EA = sc.expected_weight(t);
    const double ph = ric.phi[m];
    return Coef{rho + k * ph + k * cp.E_varphi[m],
                ac + k * cp.E_chi[m],
                k * cp.E_Avarphi[m],
                rho + ac * EA + sc.alpha(t) + k * ph + k * cp.E_Achi[m],
                k * cp.E_psi[m],
                k * cp.E_Apsi[m] + sc.beta(t) * sc.c(t) * EA};
  };
  auto mix = [](const Coef& a, const Coef& b, double w) {
    auto l = [w](double x, double y) { return (1.0 - w) * x + w * y; };
    return Coef{l(a.xi1, b.xi1), l(a.xi2, b.xi2), l(a.eta1, b.eta1), l(a.eta2, b.eta2), l(a.f1, b.f1), l(a.f2, b.f2)};
  };
  auto f = [](const Coef& c, double x, double y, double& dx, double& dy) {
    dx = c.xi1 * x + c.xi2 * y + c.f1;
    dy = c.eta1 * x + c.eta2 * y + c.f2;
  };

  Coef c0 = node_coef(0);
  for (std::size_t m = 0; m < g.steps(); ++m) {
    const Coef c1 = node_coef(m + 1);
    const Coef ch = mix(c0, c1, 0.5);
    const double h = g.t(m + 1) - g.t(m);
    const double x = mp.EX[m], y = mp.EAX[m];
    double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
    f(c0, x, y, k1x, k1y);
    f(ch, x + 0.5 * h * k1x, y + 0.5 * h * k1y, k2x, k2y);
    f(ch, x + 0.5 * h * k2x, y + 0.5 * h * k2y, k3x, k3y);
    f(c1, x + h * k3x, y + h * k3y, k4x, k4y);
    mp.EX[m + 1] = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    mp.EAX[m + 1] = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    c0 = c1;
  }
  return mp;
}

/// Affine decomposition in lambda: E[psi] = lambda g1 + gt1, E[A psi] = lambda g2 + gt2,
/// E[X] = lambda h1 + ht1, E[AX] = lambda h2 + ht2.
struct LambdaSplit {
  std::vector<double> g1, g2, gt1, gt2;
  std::vector<double> h1, h2, ht1, ht2;
};

inline LambdaSplit split_lambda(const CoefficientProcesses& p0, const MomentPath& m0, const CoefficientProcesses& p1,
                                const MomentPath& m1) {
  LambdaSplit s;
  for (std::size_t m = 0; m < p0.grid.nodes(); ++m) {
    s.g1.push_back(p1.E_psi[m] - p0.E_psi[m]);
    s.g2.push_back(p1.E_Apsi[m] - p0.E_Apsi[m]);
    s.gt1.push_back(p0.E_psi[m]);
    s.gt2.push_back(p0.E_Apsi[m]);
    s.h1.push_back(m1.EX[m] - m0.EX[m]);
    s.h2.push_back(m1.EAX[m] - m0.EAX[m]);
    s.ht1.push_back(m0.EX[m]);
    s.ht2.push_back(m0.EAX[m]);
  }
  return s;
}

inline LambdaSplit split_lambda(const LQScenario& sc, const RiccatiPath& ric, const WeightPaths& w,
                                const CoefficientOptions& opt = {}) {
  const CoefficientProcesses p0 = solve_coefficient_processes(sc, ric, 0.0, w, opt);
  const CoefficientProcesses p1 = solve_coefficient_processes(sc, ric, 1.0, w, opt);
  return split_lambda(p0, solve_moments(sc, ric, p0), p1, solve_moments(sc, ric, p1));
}

/// lambda* = (c0 - ht1(T)) / h1(T).
inline double identify_lambda(const LQScenario& sc, const LambdaSplit& s, double tol = 1e-12) {
  const double h = s.h1.back();
  if (!(std::abs(h) > tol))
    throw UnreachableConstraint("lq: E[X_T] does not depend on lambda (|h1(T)| = " + std::to_string(std::abs(h)) +
                                "); the terminal constraint cannot be met");
  return (sc.c0 - s.ht1.back()) / h;
}

/// Exact solution of the Euler-discretized problem on the grid. The ansatz
/// P_m = phi_m X_m + varphi_m E[X_m] + chi_m E[A_m X_m] + psi_m is carried through the discrete
/// adjoint P_m = (1 + rho dt) Phat_m - L dt X_m + a dt A_m E[Phat_m] with the stationarity
/// condition N u_m = b Phat_m, Phat_m = E_m[P_{m+1}].
struct DiscreteSolution {
  TimeGrid grid;
  double lambda = 0.0;
  std::vector<double> phi;                                // [node]
  CoefficientProcesses processes;                         // varphi, chi, psi per node and particle
  std::vector<PolynomialFit> ahead;                       // [step] E_m of (varphi, chi, psi)_{m+1} on A_m
  std::vector<std::array<double, 4>> transition;          // [step] Psi row-major: z_{m+1} = Psi z_m + omega
  std::vector<std::array<double, 2>> offset;              // [step] omega
  MomentPath moments;
};

inline DiscreteSolution solve_discrete(const LQScenario& sc, double lambda, const WeightPaths& w,
                                       const CoefficientOptions& opt = {}) {
  sc.validate();
  require(std::isfinite(lambda), "discrete lq: lambda must be finite");
  const TimeGrid& g = w.grid;
  require(std::abs(g.horizon() - sc.T) <= 1e-12 * sc.T, "discrete lq: grid horizon differs from scenario T");
  const std::size_t nodes = g.nodes(), steps = g.steps();
  const std::size_t n = w.a.front().size();
  const double dt = g.dt();

  DiscreteSolution ds;
  ds.grid = g;
  ds.lambda = lambda;
  ds.phi.assign(nodes, 0.0);
  ds.phi.back() = -sc.R;
  ds.ahead.resize(steps);
  ds.transition.resize(steps);
  ds.offset.resize(steps);
  CoefficientProcesses& cp = ds.processes;
  cp.grid = g;
  cp.lambda = lambda;
  for (auto* v : {&cp.E_varphi, &cp.E_Avarphi, &cp.E_chi, &cp.E_Achi, &cp.E_psi, &cp.E_Apsi}) v->assign(nodes, 0.0);
  cp.varphi.assign(nodes, std::vector<double>(n, 0.0));
  cp.chi.assign(nodes, std::vector<double>(n, 0.0));
  cp.psi.assign(nodes, std::vector<double>(n, sc.R * sc.c0 - lambda));
  detail::expectations(cp, w, nodes - 1);

  Eigen::MatrixXd resp(static_cast<Eigen::Index>(n), 3);
  for (std::size_t m = steps; m-- > 0;) {
    const double t = g.t(m);
    const double rho = sc.rho(t), ac = sc.a(t), b = sc.b(t), c = sc.c(t);
    const double al = sc.alpha(t), be = sc.beta(t);
    const double k = b * b / sc.N;
    const double ph = ds.phi[m + 1];
    const double D = 1.0 - k * dt * ph;
    require(D > 0.0, "discrete lq: step too large for the Riccati recursion");
    const double r1 = 1.0 + rho * dt, grow = std::exp(al * dt);

    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      resp(r, 0) = cp.varphi[m + 1][i];
      resp(r, 1) = cp.chi[m + 1][i];
      resp(r, 2) = cp.psi[m + 1][i];
    }
    ds.ahead[m] = PolynomialFit::fit({std::span<const double>(w.a[m])}, opt.basis_degree, resp);
    if (m > 0 && ds.ahead[m].fallbacks() > 0) {
      cp.fallbacks += static_cast<std::size_t>(ds.ahead[m].fallbacks());
      cp.warnings.push_back("discrete lq: regression degree lowered at node " + std::to_string(m));
    }
    const Eigen::MatrixXd& f = ds.ahead[m].fitted();
    const auto& A = w.a[m];
    double EA = 0, EV = 0, EC = 0, ES = 0, EAV = 0, EAC = 0, EAS = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      EA += A[i];
      EV += f(r, 0);
      EC += f(r, 1);
      ES += f(r, 2);
      EAV += A[i] * f(r, 0);
      EAC += A[i] * f(r, 1);
      EAS += A[i] * f(r, 2);
    }
    for (double* v : {&EA, &EV, &EC, &ES, &EAV, &EAC, &EAS}) *v /= static_cast<double>(n);

    // (I - K) z_{m+1} = T z_m + f
    const double kd = k * dt / D;
    const Eigen::Matrix2d K{{kd * EV, kd * EC}, {grow * kd * EAV, grow * kd * EAC}};
    const Eigen::Matrix2d T{{r1 / D, ac * dt / D}, {0.0, grow * (r1 + ac * dt * EA) / D}};
    const Eigen::Vector2d fv{kd * ES, grow * (c * be * dt * EA + kd * EAS)};
    const Eigen::Matrix2d IK = Eigen::Matrix2d::Identity() - K;
    const Eigen::Matrix2d Psi = IK.partialPivLu().solve(T);
    const Eigen::Vector2d om = IK.partialPivLu().solve(fv);
    ds.transition[m] = {Psi(0, 0), Psi(0, 1), Psi(1, 0), Psi(1, 1)};
    ds.offset[m] = {om(0), om(1)};

    ds.phi[m] = r1 * r1 * ph / D - sc.L * dt;
    if (!std::isfinite(ds.phi[m])) throw NumericalError("discrete lq: non-finite Riccati value", m);
    const double mv = ph * r1 + EV * Psi(0, 0) + EC * Psi(1, 0);
    const double mc = ph * ac * dt + EV * Psi(0, 1) + EC * Psi(1, 1);
    const double ms = EV * om(0) + EC * om(1) + ES;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double V = f(r, 0), C = f(r, 1), S = f(r, 2);
      const double wa = ac * dt * A[i] / D;
      cp.varphi[m][i] = r1 / D * (V * Psi(0, 0) + C * Psi(1, 0)) + wa * mv;
      cp.chi[m][i] = r1 / D * (ph * ac * dt + V * Psi(0, 1) + C * Psi(1, 1)) + wa * mc;
      cp.psi[m][i] = r1 / D * (V * om(0) + C * om(1) + S) + wa * ms;
    }
    detail::expectations(cp, w, m);
  }

  MomentPath& mp = ds.moments;
  mp.grid = g;
  mp.EX.assign(nodes, 0.0);
  mp.EAX.assign(nodes, 0.0);
  mp.EX[0] = sc.x0;
  mp.EAX[0] = sc.a0 * sc.x0;
  for (std::size_t m = 0; m < steps; ++m) {
    const auto& P = ds.transition[m];
    const double z1 = mp.EX[m], z2 = mp.EAX[m];
    mp.EX[m + 1] = P[0] * z1 + P[1] * z2 + ds.offset[m][0];
    mp.EAX[m + 1] = P[2] * z1 + P[3] * z2 + ds.offset[m][1];
  }
  return ds;
}

/// u_m = N^-1 b Phat_m with Phat_m from the discrete ansatz and the precomputed moments.
inline Feedback synthesize_feedback(const LQScenario& sc, const DiscreteSolution& ds) {
  return Feedback{[sc, ds](std::size_t m, double t, double x, double a, const EnsembleStats&) {
    const double dt = ds.grid.dt();
    const double b = sc.b(t), k = b * b / sc.N;
    const double ph = ds.phi[m + 1];
    const double D = 1.0 - k * dt * ph;
    const std::span<const double> pt(&a, 1);
    const double V = ds.ahead[m].predict(pt, 0), C = ds.ahead[m].predict(pt, 1), S = ds.ahead[m].predict(pt, 2);
    const double ph_hat = (ph * ((1.0 + sc.rho(t) * dt) * x + sc.a(t) * dt * ds.moments.EAX[m]) +
                           V * ds.moments.EX[m + 1] + C * ds.moments.EAX[m + 1] + S) /
                          D;
    return b / sc.N * ph_hat;
  }};
}

enum class Scheme {
  Discrete,    // exact optimum of the Euler-discretized problem (default)
  Continuous,  // RK4 Riccati, explicit LSMC coefficient processes, RK4 moments
};

struct LqOptions {
  CoefficientOptions coefficients;
  Scheme scheme = Scheme::Discrete;
};

/// Everything the pipeline produces for one scenario, grid and noise.
/// Under Scheme::Discrete, riccati holds the discrete recursion and discrete the one-step fits.
struct LqSolution {
  Scheme scheme = Scheme::Discrete;
  RiccatiPath riccati;
  WeightPaths weights;
  LambdaSplit split;
  double lambda = 0.0;
  CoefficientProcesses processes;  // at lambda
  MomentPath moments;              // at lambda
  std::optional<DiscreteSolution> discrete;
};

/// Terminal mean E[X_T] predicted by the scheme at a given lambda.
inline double predicted_terminal_mean(const LQScenario& sc, const RiccatiPath& ric, const WeightPaths& w, double lambda,
                                      const LqOptions& opt = {}) {
  if (opt.scheme == Scheme::Discrete) return solve_discrete(sc, lambda, w, opt.coefficients).moments.EX.back();
  return solve_moments(sc, ric, solve_coefficient_processes(sc, ric, lambda, w, opt.coefficients)).EX.back();
}

inline LqSolution solve_lq(const LQScenario& sc, const NoiseBundle& noise, const LqOptions& opt = {}) {
  LqSolution s;
  s.scheme = opt.scheme;
  s.weights = simulate_weight_paths(sc, noise);
  if (opt.scheme == Scheme::Continuous) {
    s.riccati = solve_riccati(sc, noise.grid());
    s.split = split_lambda(sc, s.riccati, s.weights, opt.coefficients);
    s.lambda = identify_lambda(sc, s.split);
    s.processes = solve_coefficient_processes(sc, s.riccati, s.lambda, s.weights, opt.coefficients);
    s.moments = solve_moments(sc, s.riccati, s.processes);
    return s;
  }
  {
    const DiscreteSolution d0 = solve_discrete(sc, 0.0, s.weights, opt.coefficients);
    const DiscreteSolution d1 = solve_discrete(sc, 1.0, s.weights, opt.coefficients);
    s.split = split_lambda(d0.processes, d0.moments, d1.processes, d1.moments);
  }
  s.lambda = identify_lambda(sc, s.split);
  DiscreteSolution ds = solve_discrete(sc, s.lambda, s.weights, opt.coefficients);
  s.riccati = RiccatiPath{ds.grid, ds.phi};
  s.processes = ds.processes;
  s.moments = ds.moments;
  s.discrete = std::move(ds);
  return s;
}

/// Linear gain N^-1 b phi of u on x, per node.
inline std::vector<double> feedback_gain(const LQScenario& sc, const RiccatiPath& ric) {
  std::vector<double> k(ric.grid.nodes());
  for (std::size_t m = 0; m < k.size(); ++m) k[m] = sc.b(ric.grid.t(m)) / sc.N * ric.phi[m];
  return k;
}

/// u = N^-1 b (phi x + varphi(A) E[X] + chi(A) E[AX] + psi(A)) with precomputed moments.
inline Feedback synthesize_feedback(const LQScenario& sc, const RiccatiPath& ric, const CoefficientProcesses& cp,
                                    const MomentPath& mp) {
  require(ric.grid == cp.grid && cp.grid == mp.grid, "feedback: inputs use different grids");
  return Feedback{[sc, ric, cp, mp](std::size_t m, double t, double x, double a, const EnsembleStats&) {
    using C = CoefficientProcesses;
    const double p = ric.phi[m] * x + cp.value(C::Varphi, m, a) * mp.EX[m] + cp.value(C::Chi, m, a) * mp.EAX[m] +
                     cp.value(C::Psi, m, a);
    return sc.b(t) / sc.N * p;
  }};
}

inline Feedback synthesize_feedback(const LQScenario& sc, const LqSolution& s) {
  if (s.discrete) return synthesize_feedback(sc, *s.discrete);
  return synthesize_feedback(sc, s.riccati, s.processes, s.moments);
}

struct PanelEntry {
  std::size_t direction = 0;
  double epsilon = 0.0;
  Estimate J_perturbed;
  Estimate difference;  // J(u* + eps v) - J(u*), paired samples
  bool passed = false;  // J(u*) <= J(u* + eps v) + 3 se
};

struct VerificationReport {
  double lambda = 0.0;
  Estimate EXT;
  double constraint_gap = 0.0;  // |E[X_T] - c0|
  Estimate J_star;
  SmpResidual smp;
  std::vector<PanelEntry> panel;
  std::vector<std::string> warnings;

  bool constraint_ok() const { return constraint_gap <= 3.0 * EXT.se; }
  bool panel_ok() const {
    for (const auto& e : panel)
      if (!e.passed) return false;
    return true;
  }
};

struct VerifyOptions {
  std::size_t panel_size = 20;
  std::vector<double> epsilons{0.1, 0.5};
  std::uint64_t panel_seed = 11;
  int basis_degree = 2;
  unsigned threads = 1;
};

/// Bounded random direction: sum of three cosines in time with |v| <= 1.
inline OpenLoop random_direction(const TimeGrid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double c[3];
  for (double& x : c) x = unif(rng) / 3.0;
  OpenLoop v;
  for (std::size_t m = 0; m < g.nodes(); ++m) {
    const double s = g.t(m) / g.horizon();
    v.values.push_back(c[0] + c[1] * std::cos(M_PI * s) + c[2] * std::cos(2.0 * M_PI * s));
  }
  return v;
}

/// Closed-loop check of a synthesized control: terminal constraint, SMP residual and a perturbation panel.
inline VerificationReport verify_optimality(const LQScenario& sc, double lambda, const Feedback& u_star,
                                            const NoiseBundle& noise, const VerifyOptions& opt = {}) {
  const models::LqModel model(sc, lambda);
  const SimulationOptions so{opt.threads};
  const EnsemblePath path = simulate(model, ControlSpec(u_star), sc.x0, sc.a0, noise, so);

  VerificationReport rep;
  rep.lambda = lambda;
  rep.EXT = estimate(path.x.back());
  rep.constraint_gap = std::abs(rep.EXT.value - sc.c0);
  const std::vector<double> j0 = cost_samples(path, model);
  rep.J_star = estimate(j0);

  AdjointOptions ao;
  ao.basis_degree = opt.basis_degree;
  ao.threads = opt.threads;
  const AdjointEnsemble adj = solve_adjoint(model, path, noise, ao);
  rep.smp = smp_residual(model, path, adj);
  rep.warnings = adj.warnings;

  std::mt19937_64 rng(opt.panel_seed);
  const ProcessControl base = path.realized_control();
  std::vector<double> d(j0.size());
  for (std::size_t k = 0; k < opt.panel_size; ++k) {
    const OpenLoop v = random_direction(path.grid, rng);
    for (double e : opt.epsilons) {
      const EnsemblePath pe = simulate(model, ControlSpec(perturb(base, v, e)), sc.x0, sc.a0, noise, so);
      const std::vector<double> je = cost_samples(pe, model);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = je[i] - j0[i];
      PanelEntry pe_row{k, e, estimate(je), estimate(d), false};
      pe_row.passed = pe_row.difference.value >= -3.0 * pe_row.difference.se;
      rep.panel.push_back(pe_row);
    }
  }
  return rep;
}

}  // namespace wmfc::lq
