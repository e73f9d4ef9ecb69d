#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "wmfc/errors.hpp"
#include "wmfc/measures.hpp"

namespace wmfc {

/// Upper bound on the number of test functions a model may observe the measure through.
inline constexpr std::size_t kMaxFeatures = 4;

/// Measure coordinates m_k = <mu, phi_k> for the model's test functions phi_k.
/// Coefficients depend on mu only through these values.
struct MeasureSummary {
  std::array<double, kMaxFeatures> m{};

  double operator[](std::size_t k) const noexcept { return m[k]; }
  double& operator[](std::size_t k) noexcept { return m[k]; }
};

/// A coefficient value with its partial derivatives in x, u and in the measure coordinates.
/// The flat measure derivative is then phi_mu(x, mu, u; x') = sum_k d_m[k] * phi_k(x').
struct Jet {
  double value = 0.0;
  double d_x = 0.0;
  double d_u = 0.0;
  std::array<double, kMaxFeatures> d_m{};
};

/// b, sigma, alpha, beta at one point.
struct Dynamics {
  Jet b;
  Jet sigma;
  Jet alpha;
  Jet beta;
};

/// Running cost f(x, a, mu, u) and its partials.
struct RunningCost {
  double value = 0.0;
  double d_x = 0.0;
  double d_a = 0.0;
  double d_u = 0.0;
  std::array<double, kMaxFeatures> d_m{};
};

/// Terminal cost Phi(x, a) and its partials.
struct TerminalCost {
  double value = 0.0;
  double d_x = 0.0;
  double d_a = 0.0;
};

/// Convex control set [lo, hi]; either end may be infinite.
struct ControlDomain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double u) const noexcept { return u >= lo && u <= hi; }
  double clip(double u) const noexcept { return u < lo ? lo : (u > hi ? hi : u); }
};

/// Coefficients of the controlled weighted mean-field system and its cost.
///
/// The measure enters through finitely many coordinates <mu, phi_k>, so the flat derivative
/// of a coefficient is sum_k (d coefficient / d m_k) phi_k(x') and its x'-derivative is
/// sum_k (d coefficient / d m_k) phi_k'(x').
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t feature_count() const { return 0; }
  virtual double feature(std::size_t /*k*/, double /*x*/) const { return 0.0; }
  virtual double feature_dx(std::size_t /*k*/, double /*x*/) const { return 0.0; }

  virtual Dynamics dynamics(double t, double x, const MeasureSummary& mu, double u) const = 0;
  virtual RunningCost running_cost(double t, double x, double a, const MeasureSummary& mu, double u) const = 0;
  virtual TerminalCost terminal_cost(double x, double a) const = 0;
  virtual ControlDomain domain() const { return {}; }

  MeasureSummary summarize(const WeightedEnsemble& e) const { return summarize(e.x(), e.a()); }

  MeasureSummary summarize(std::span<const double> x, std::span<const double> a) const {
    MeasureSummary s;
    const std::size_t kf = feature_count();
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < kf; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += a[i] * feature(k, x[i]);
      s[k] = acc / n;
    }
    return s;
  }

  /// Kernel phi_mu(theta; x') of a coefficient jet.
  double kernel(const std::array<double, kMaxFeatures>& d_m, double xp) const {
    double s = 0.0;
    for (std::size_t k = 0; k < feature_count(); ++k) s += d_m[k] * feature(k, xp);
    return s;
  }

  /// Kernel x'-derivative phi_{mu,1}(theta; x').
  double kernel_dx(const std::array<double, kMaxFeatures>& d_m, double xp) const {
    double s = 0.0;
    for (std::size_t k = 0; k < feature_count(); ++k) s += d_m[k] * feature_dx(k, xp);
    return s;
  }
};

/// alpha - beta^2 / 2, the drift of ln A, with its partials.
inline Jet log_weight_drift(const Dynamics& d) {
  Jet j;
  const double be = d.beta.value;
  j.value = d.alpha.value - 0.5 * be * be;
  j.d_x = d.alpha.d_x - be * d.beta.d_x;
  j.d_u = d.alpha.d_u - be * d.beta.d_u;
  for (std::size_t k = 0; k < kMaxFeatures; ++k) j.d_m[k] = d.alpha.d_m[k] - be * d.beta.d_m[k];
  return j;
}

}  // namespace wmfc
