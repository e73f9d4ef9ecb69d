#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wmfc/model.hpp"

namespace wmfc::models {

/// Deterministic coefficient of time: a constant, or a table of (t, value) knots linearly
/// interpolated and held flat outside the table.
class TimeFunction {
 public:
  TimeFunction(double constant = 0.0) : knots_{{0.0, constant}} {}  // NOLINT(implicit)

  explicit TimeFunction(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
    require(!knots_.empty(), "time function: empty table");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      require(std::isfinite(knots_[i].first) && std::isfinite(knots_[i].second), "time function: non-finite knot");
      if (i > 0) require(knots_[i].first > knots_[i - 1].first, "time function: knot times must increase");
    }
  }

  bool is_constant() const noexcept { return knots_.size() == 1; }

  double operator()(double t) const {
    if (t <= knots_.front().first) return knots_.front().second;
    if (t >= knots_.back().first) return knots_.back().second;
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double v, const auto& k) { return v < k.first; });
    auto lo = hi - 1;
    const double w = (t - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  }

  /// Exact integral over [t0, t1] of the piecewise-linear function.
  double integral(double t0, double t1) const {
    if (t1 < t0) return -integral(t1, t0);
    std::vector<double> cuts{t0};
    for (const auto& k : knots_)
      if (k.first > t0 && k.first < t1) cuts.push_back(k.first);
    cuts.push_back(t1);
    double s = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i)
      s += 0.5 * (cuts[i] - cuts[i - 1]) * ((*this)(cuts[i - 1]) + (*this)(cuts[i]));
    return s;
  }

  double sup_abs(double t0, double t1) const {
    double s = std::max(std::abs((*this)(t0)), std::abs((*this)(t1)));
    for (const auto& k : knots_)
      if (k.first > t0 && k.first < t1) s = std::max(s, std::abs(k.second));
    return s;
  }

  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

 private:
  std::vector<std::pair<double, double>> knots_;
};

/// Market data of the asset-liability problem.
struct LQScenario {
  TimeFunction rho = 0.05;   // interest rate
  TimeFunction a = 0.2;      // liability loading on E[A X]
  TimeFunction b = 1.0;      // premium loading
  TimeFunction c = 0.3;      // liability volatility
  TimeFunction alpha = 0.05; // weight drift
  TimeFunction beta = 0.2;   // weight volatility
  double L = 1.0;
  double M = 0.5;
  double N = 1.0;
  double R = 1.0;
  double c0 = 1.2;
  double x0 = 1.0;
  double a0 = 1.0;
  double T = 1.0;

  void validate() const {
    require(std::isfinite(N) && N > 0.0, "lq scenario: N must be positive");
    require(L >= 0.0 && M >= 0.0 && R >= 0.0, "lq scenario: L, M, R must be nonnegative");
    require(std::isfinite(T) && T > 0.0, "lq scenario: T must be positive");
    require(x0 >= 0.0, "lq scenario: x0 must be nonnegative");
    require(a0 > 0.0, "lq scenario: a0 must be positive");
    require(std::isfinite(c0), "lq scenario: c0 must be finite");
  }

  /// E[A_t] = a0 exp(int_0^t alpha).
  double expected_weight(double t) const { return a0 * std::exp(alpha.integral(0.0, t)); }
};

inline TimeFunction time_function_from_json(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return TimeFunction(j.get<double>());
  require(j.is_array(), "lq scenario: '" + key + "' must be a number or a table of [t, value] pairs");
  std::vector<std::pair<double, double>> knots;
  for (const auto& row : j) {
    require(row.is_array() && row.size() == 2 && row[0].is_number() && row[1].is_number(),
            "lq scenario: '" + key + "' table rows must be [t, value]");
    knots.emplace_back(row[0].get<double>(), row[1].get<double>());
  }
  return TimeFunction(std::move(knots));
}

inline nlohmann::json time_function_to_json(const TimeFunction& f) {
  if (f.is_constant()) return f.knots().front().second;
  auto arr = nlohmann::json::array();
  for (const auto& [t, v] : f.knots()) arr.push_back({t, v});
  return arr;
}

inline LQScenario lq_scenario_from_json(const nlohmann::json& j) {
  require(j.is_object(), "lq scenario: expected a JSON object");
  static const char* known[] = {"rho", "a", "b", "c", "alpha", "beta", "L", "M", "N", "R", "c0", "x0", "a0", "T"};
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    require(ok, "lq scenario: unknown key '" + k + "'");
  }
  LQScenario sc;
  auto tf = [&](const char* key, TimeFunction& out) {
    if (j.contains(key)) out = time_function_from_json(j.at(key), key);
  };
  auto num = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    require(j.at(key).is_number(), std::string("lq scenario: '") + key + "' must be a number");
    out = j.at(key).get<double>();
  };
  tf("rho", sc.rho);
  tf("a", sc.a);
  tf("b", sc.b);
  tf("c", sc.c);
  tf("alpha", sc.alpha);
  tf("beta", sc.beta);
  num("L", sc.L);
  num("M", sc.M);
  num("N", sc.N);
  num("R", sc.R);
  num("c0", sc.c0);
  num("x0", sc.x0);
  num("a0", sc.a0);
  num("T", sc.T);
  sc.validate();
  return sc;
}

inline nlohmann::json lq_scenario_to_json(const LQScenario& sc) {
  return {{"rho", time_function_to_json(sc.rho)},     {"a", time_function_to_json(sc.a)},
          {"b", time_function_to_json(sc.b)},         {"c", time_function_to_json(sc.c)},
          {"alpha", time_function_to_json(sc.alpha)}, {"beta", time_function_to_json(sc.beta)},
          {"L", sc.L}, {"M", sc.M}, {"N", sc.N}, {"R", sc.R}, {"c0", sc.c0}, {"x0", sc.x0},
          {"a0", sc.a0}, {"T", sc.T}};
}

/// The asset-liability system under the Lagrangian cost J_lambda:
///   b = rho x + a <mu, id> + b u, sigma = c, alpha, beta deterministic,
///   f = (L x^2 + M a^2 + N u^2) / 2, Phi = R (x - c0)^2 / 2 + lambda (x - c0).
class LqModel final : public Model {
 public:
  LqModel(LQScenario sc, double lambda) : sc_(std::move(sc)), lambda_(lambda) { sc_.validate(); }

  const LQScenario& scenario() const noexcept { return sc_; }
  double lambda() const noexcept { return lambda_; }

  std::size_t feature_count() const override { return 1; }
  double feature(std::size_t, double x) const override { return x; }
  double feature_dx(std::size_t, double) const override { return 1.0; }

  Dynamics dynamics(double t, double x, const MeasureSummary& mu, double u) const override {
    const double rho = sc_.rho(t), a = sc_.a(t), b = sc_.b(t);
    Dynamics d;
    d.b.value = rho * x + a * mu[0] + b * u;
    d.b.d_x = rho;
    d.b.d_u = b;
    d.b.d_m[0] = a;
    d.sigma.value = sc_.c(t);
    d.alpha.value = sc_.alpha(t);
    d.beta.value = sc_.beta(t);
    return d;
  }

  RunningCost running_cost(double, double x, double a, const MeasureSummary&, double u) const override {
    RunningCost c;
    c.value = 0.5 * (sc_.L * x * x + sc_.M * a * a + sc_.N * u * u);
    c.d_x = sc_.L * x;
    c.d_a = sc_.M * a;
    c.d_u = sc_.N * u;
    return c;
  }

  TerminalCost terminal_cost(double x, double) const override {
    const double e = x - sc_.c0;
    return {0.5 * sc_.R * e * e + lambda_ * e, sc_.R * e + lambda_, 0.0};
  }

 private:
  LQScenario sc_;
  double lambda_;
};

inline LqModel lq_model(const LQScenario& sc, double lambda) { return LqModel(sc, lambda); }

}  // namespace wmfc::models
