#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wmfc/errors.hpp"

namespace wmfc {

/// Least-squares fit of several responses on polynomials (total degree <= d) in one or more
/// standardized regressors. Regressors with no spread are dropped; if the design is still rank
/// deficient the degree is lowered until it is not.
class PolynomialFit {
 public:
  PolynomialFit() = default;

  static PolynomialFit fit(const std::vector<std::span<const double>>& regressors, int degree,
                           const Eigen::MatrixXd& responses) {
    require(!regressors.empty(), "regression: no regressors");
    require(degree >= 0, "regression: negative degree");
    const Eigen::Index n = static_cast<Eigen::Index>(regressors.front().size());
    require(responses.rows() == n && n > 0, "regression: response/regressor size mismatch");

    PolynomialFit f;
    f.requested_degree_ = degree;
    for (const auto& r : regressors) {
      require(static_cast<Eigen::Index>(r.size()) == n, "regression: regressors of unequal length");
      double mean = 0.0;
      for (double v : r) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : r) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      f.center_.push_back(mean);
      f.scale_.push_back(sd);
      f.active_.push_back(sd > 1e-12 * (1.0 + std::abs(mean)));
    }

    for (int d = degree; d >= 0; --d) {
      f.degree_ = d;
      f.build_exponents();
      Eigen::MatrixXd design(n, static_cast<Eigen::Index>(f.exponents_.size()));
      std::vector<double> z(regressors.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < regressors.size(); ++k) z[k] = f.standardize(k, regressors[k][i]);
        f.row(z, design.row(i));
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      qr.setThreshold(1e-10);
      if (qr.rank() == design.cols()) {
        f.coef_ = qr.solve(responses);
        f.fitted_ = design * f.coef_;
        return f;
      }
      ++f.fallbacks_;
    }
    throw NumericalError("regression: design is degenerate even at degree 0", 0);
  }

  int degree() const noexcept { return degree_; }
  int requested_degree() const noexcept { return requested_degree_; }
  int fallbacks() const noexcept { return fallbacks_; }
  std::size_t basis_size() const noexcept { return exponents_.size(); }

  /// In-sample fitted values, one column per response.
  const Eigen::MatrixXd& fitted() const noexcept { return fitted_; }
  const Eigen::MatrixXd& coefficients() const noexcept { return coef_; }

  double predict(std::span<const double> point, Eigen::Index response = 0) const {
    std::vector<double> z(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) z[k] = standardize(k, point[k]);
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(exponents_.size()));
    row(z, r);
    return r.dot(coef_.col(response));
  }

  /// Root-mean-square in-sample residual of a response.
  double residual_rms(const Eigen::MatrixXd& responses, Eigen::Index response = 0) const {
    return std::sqrt((responses.col(response) - fitted_.col(response)).squaredNorm() /
                     static_cast<double>(responses.rows()));
  }

 private:
  double standardize(std::size_t k, double v) const {
    return active_[k] ? (v - center_[k]) / scale_[k] : 0.0;
  }

  void build_exponents() {
    exponents_.clear();
    std::vector<int> e(active_.size(), 0);
    // Enumerate exponent vectors over active regressors with total degree <= degree_.
    auto rec = [&](auto&& self, std::size_t k, int left) -> void {
      if (k == active_.size()) {
        exponents_.push_back(e);
        return;
      }
      const int top = active_[k] ? left : 0;
      for (int p = 0; p <= top; ++p) {
        e[k] = p;
        self(self, k + 1, left - p);
      }
      e[k] = 0;
    };
    rec(rec, 0, degree_);
  }

  template <class Row>
  void row(const std::vector<double>& z, Row&& out) const {
    for (std::size_t c = 0; c < exponents_.size(); ++c) {
      double v = 1.0;
      for (std::size_t k = 0; k < z.size(); ++k)
        for (int p = 0; p < exponents_[c][k]; ++p) v *= z[k];
      out(static_cast<Eigen::Index>(c)) = v;
    }
  }

  int requested_degree_ = 0;
  int degree_ = 0;
  int fallbacks_ = 0;
  std::vector<double> center_, scale_;
  std::vector<bool> active_;
  std::vector<std::vector<int>> exponents_;
  Eigen::MatrixXd coef_;
  Eigen::MatrixXd fitted_;
};

}  // namespace wmfc
