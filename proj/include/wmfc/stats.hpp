#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "wmfc/errors.hpp"

namespace wmfc {

/// Sample mean with its Monte Carlo standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline Estimate estimate(std::span<const double> samples) {
  require(!samples.empty(), "estimate: no samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline double combined_se(double a, double b) { return std::sqrt(a * a + b * b); }

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_slope: need two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "fit_slope: abscissae are all equal");
  return sxy / sxx;
}

}  // namespace wmfc
