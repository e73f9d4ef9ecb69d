#pragma once

// Reference computations used only by the tests. None of them call the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Bounded-Lipschitz distance of two atomic measures by vertex enumeration.
/// Atoms are (position, signed mass) on a sorted support. A vertex of
/// {|f_k| <= 1, |f_k - f_l| <= |z_k - z_l|} fixes every f_k through a forest of tight
/// constraints rooted at a pinned value +-1; on a line only neighbouring links are needed.
inline double bl_vertex(const std::vector<std::pair<double, double>>& atoms) {
  const std::size_t K = atoms.size();
  std::vector<double> d(K > 0 ? K - 1 : 0);
  for (std::size_t k = 0; k + 1 < K; ++k) d[k] = atoms[k + 1].first - atoms[k].first;
  std::vector<int> choice(K, 0);
  std::vector<double> f(K);
  std::vector<char> known(K);
  double best = 0.0;
  for (;;) {
    std::fill(known.begin(), known.end(), 0);
    for (std::size_t k = 0; k < K; ++k)
      if (choice[k] < 2) {
        f[k] = choice[k] == 0 ? 1.0 : -1.0;
        known[k] = 1;
      }
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t k = 0; k < K; ++k) {
        if (known[k]) continue;
        const int c = choice[k];
        if ((c == 2 || c == 3) && k > 0 && known[k - 1]) {
          f[k] = f[k - 1] + (c == 2 ? d[k - 1] : -d[k - 1]);
        } else if ((c == 4 || c == 5) && k + 1 < K && known[k + 1]) {
          f[k] = f[k + 1] + (c == 4 ? d[k] : -d[k]);
        } else {
          continue;
        }
        known[k] = 1;
        changed = true;
      }
    }
    bool ok = true;
    for (std::size_t k = 0; k < K && ok; ++k) ok = known[k] && std::abs(f[k]) <= 1.0 + 1e-12;
    for (std::size_t k = 0; k < K && ok; ++k)
      for (std::size_t l = k + 1; l < K && ok; ++l)
        ok = std::abs(f[k] - f[l]) <= std::abs(atoms[k].first - atoms[l].first) + 1e-12;
    if (ok) {
      double v = 0.0;
      for (std::size_t k = 0; k < K; ++k) v += atoms[k].second * f[k];
      best = std::max(best, std::abs(v));
    }
    std::size_t k = 0;
    while (k < K && ++choice[k] == 6) choice[k++] = 0;
    if (k == K) break;
  }
  return best;
}

inline double composite_simpson(const std::function<double(double)>& g, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = g(a) + g(b);
  for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Constant-coefficient asset-liability data for the affine-in-A recursions.
struct LqData {
  double rho, a, b, c, alpha, beta, L, M, N, R, c0, x0, a0, T;
};

/// Exact explicit-Euler recursion of the ansatz processes when the weight is geometric:
/// each process is y0 + y1 A, E_m[A_{m+1}] = e^{alpha dt} A_m, and the expectations use the
/// exact moments E[A] and E[A^2] of the log-Euler weight. Returns per-node
/// (E_varphi, E_Avarphi, E_chi, E_Achi, E_psi, E_Apsi).
inline std::vector<std::array<double, 6>> affine_processes(const LqData& p, const std::vector<double>& phi,
                                                          std::size_t steps, double lambda) {
  const double dt = p.T / static_cast<double>(steps);
  const double k = p.b * p.b / p.N;
  auto EA = [&](std::size_t m) { return p.a0 * std::exp(p.alpha * dt * m); };
  auto EA2 = [&](std::size_t m) { return p.a0 * p.a0 * std::exp((2 * p.alpha + p.beta * p.beta) * dt * m); };
  // y[0..1] varphi, y[2..3] chi, y[4..5] psi as (constant, slope in A)
  std::array<double, 6> y{0, 0, 0, 0, p.R * p.c0 - lambda, 0};
  auto moments = [&](const std::array<double, 6>& c, std::size_t m) {
    std::array<double, 6> e{};
    for (int j = 0; j < 3; ++j) {
      e[2 * j] = c[2 * j] + c[2 * j + 1] * EA(m);
      e[2 * j + 1] = c[2 * j] * EA(m) + c[2 * j + 1] * EA2(m);
    }
    return e;
  };
  std::vector<std::array<double, 6>> out(steps + 1);
  out[steps] = moments(y, steps);
  const double grow = std::exp(p.alpha * dt);
  for (std::size_t m = steps; m-- > 0;) {
    const std::size_t l = m + 1;
    const auto e = out[l];
    const double Ev = e[0], EAv = e[1], Ec = e[2], EAc = e[3], Ep = e[4], EAp = e[5];
    const double ph = phi[l], ea = EA(l);
    // drivers written as g = g0 + g1 A with the processes' own affine parts
    const double cv = 2 * p.rho + 2 * k * ph + k * Ev;
    const double gv0 = -(cv * y[0] + k * EAv * y[2]);
    const double gv1 = -(cv * y[1] + k * EAv * y[3] + p.a * Ev + p.a * ph);
    const double cc = 2 * p.rho + 2 * k * ph + p.alpha + p.a * ea + k * EAc;
    const double gc0 = -(cc * y[2] + (p.a + k * Ec) * y[0] + p.a * ph);
    const double gc1 = -(cc * y[3] + (p.a + k * Ec) * y[1] + p.a * Ec);
    const double cp = p.rho + k * ph;
    const double wp = p.beta * p.c * ea + k * EAp;
    const double gp0 = -(cp * y[4] + k * Ep * y[0] + wp * y[2]);
    const double gp1 = -(cp * y[5] + k * Ep * y[1] + wp * y[3] + p.a * Ep);
    const std::array<double, 6> g{gv0, gv1, gc0, gc1, gp0, gp1};
    for (int j = 0; j < 6; ++j) y[j] -= g[j] * dt;
    for (int j = 1; j < 6; j += 2) y[j] *= grow;
    out[m] = moments(y, m);
  }
  return out;
}

/// Deterministic discrete problem (c = beta = 0, so every particle follows the same path):
///   x_{m+1} = x_m + dt (rho x_m + a A_m x_m + b u_m), A_m = a0 e^{alpha t_m},
///   J(u) = sum dt (L x^2 + M A^2 + N u^2) / 2 + R (x_M - c0)^2 / 2.
/// Minimizes J subject to x_M = c0 through the KKT system of the quadratic; returns (u, lambda)
/// with lambda the multiplier of the terminal term lambda (x_M - c0).
struct KktSolution {
  std::vector<double> u;
  double lambda;
};

inline KktSolution deterministic_kkt(const LqData& p, std::size_t steps) {
  const double dt = p.T / static_cast<double>(steps);
  const auto n = static_cast<Eigen::Index>(steps);
  // x_m = s_m + sum_j G(m, j) u_j
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n + 1, n);
  Eigen::VectorXd s(n + 1);
  s(0) = p.x0;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double A = p.a0 * std::exp(p.alpha * dt * static_cast<double>(m));
    const double f = 1.0 + dt * (p.rho + p.a * A);
    s(m + 1) = f * s(m);
    G.row(m + 1) = f * G.row(m);
    G(m + 1, m) += dt * p.b;
  }
  Eigen::MatrixXd H = p.N * dt * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    H += p.L * dt * G.row(m).transpose() * G.row(m);
    g += p.L * dt * s(m) * G.row(m).transpose();
  }
  H += p.R * G.row(n).transpose() * G.row(n);
  g += p.R * (s(n) - p.c0) * G.row(n).transpose();
  // stationarity H u + g + lambda G_M = 0, constraint G_M u = c0 - s_M
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = H;
  K.block(0, n, n, 1) = G.row(n).transpose();
  K.block(n, 0, 1, n) = G.row(n);
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = -g;
  rhs(n) = p.c0 - s(n);
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  KktSolution out;
  out.u.assign(sol.data(), sol.data() + n);
  out.lambda = sol(n);
  return out;
}

/// Value of the scalar discrete LQ problem (a = 0) with noise, at x0:
///   x' = F x + G u + c dW, stage (Q x^2 + Rc u^2) / 2, terminal R (x - c0)^2 / 2 + lambda (x - c0),
/// plus the control-independent weight cost sum M dt E[A_m^2] / 2.
inline double scalar_lq_value(const LqData& p, std::size_t steps, double lambda) {
  const double dt = p.T / static_cast<double>(steps);
  const double F = 1.0 + p.rho * dt, G = p.b * dt, Q = p.L * dt, Rc = p.N * dt;
  double K = p.R, h = lambda - p.R * p.c0, r = 0.5 * p.R * p.c0 * p.c0 - lambda * p.c0;
  for (std::size_t m = steps; m-- > 0;) {
    const double D = Rc + K * G * G;
    const double Kn = Q + F * F * K - (K * G * F) * (K * G * F) / D;
    const double hn = F * h - (K * G * F) * (h * G) / D;
    const double rn = r + 0.5 * K * p.c * p.c * dt - 0.5 * (h * G) * (h * G) / D;
    K = Kn;
    h = hn;
    r = rn;
  }
  double weight = 0.0;
  for (std::size_t m = 0; m < steps; ++m)
    weight += 0.5 * p.M * dt * p.a0 * p.a0 * std::exp((2 * p.alpha + p.beta * p.beta) * dt * m);
  return 0.5 * K * p.x0 * p.x0 + h * p.x0 + r + weight;
}

/// E[X_M] of the same scalar problem under its optimal affine feedback.
inline double scalar_lq_terminal_mean(const LqData& p, std::size_t steps, double lambda) {
  const double dt = p.T / static_cast<double>(steps);
  const double F = 1.0 + p.rho * dt, G = p.b * dt, Q = p.L * dt, Rc = p.N * dt;
  std::vector<double> gain(steps), shift(steps);
  double K = p.R, h = lambda - p.R * p.c0;
  for (std::size_t m = steps; m-- > 0;) {
    const double D = Rc + K * G * G;
    gain[m] = -K * G * F / D;
    shift[m] = -h * G / D;
    const double Kn = Q + F * F * K - (K * G * F) * (K * G * F) / D;
    h = F * h - (K * G * F) * (h * G) / D;
    K = Kn;
  }
  double ex = p.x0;
  for (std::size_t m = 0; m < steps; ++m) ex = (F + G * gain[m]) * ex + G * shift[m];
  return ex;
}

}  // namespace oracle
