#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "wmfc/errors.hpp"

namespace wmfc::lp {

/// maximize c·y subject to A y <= b, y >= 0, with b >= 0 so that y = 0 is feasible.
/// Dense tableau simplex with Bland's rule; intended for small problems.
struct Problem {
  std::size_t vars = 0;
  std::vector<std::vector<double>> rows;  // each row has `vars` coefficients
  std::vector<double> rhs;
  std::vector<double> objective;
};

struct Solution {
  double value = 0.0;
  std::vector<double> y;
  std::size_t pivots = 0;
};

inline Solution maximize(const Problem& p, double eps = 1e-12) {
  const std::size_t n = p.vars;
  const std::size_t m = p.rows.size();
  require(p.objective.size() == n && p.rhs.size() == m, "lp: inconsistent problem dimensions");
  for (double b : p.rhs) require(b >= 0.0, "lp: right-hand side must be nonnegative");

  // Tableau: m constraint rows + objective row, columns = n structural + m slack + rhs.
  const std::size_t cols = n + m + 1;
  std::vector<double> tab((m + 1) * cols, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return tab[r * cols + c]; };
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    require(p.rows[r].size() == n, "lp: row length mismatch");
    for (std::size_t c = 0; c < n; ++c) at(r, c) = p.rows[r][c];
    at(r, n + r) = 1.0;
    at(r, cols - 1) = p.rhs[r];
    basis[r] = n + r;
  }
  for (std::size_t c = 0; c < n; ++c) at(m, c) = -p.objective[c];

  Solution sol;
  const std::size_t max_pivots = 50 * (n + m) + 1000;
  while (true) {
    // Bland: lowest-index column with negative reduced cost.
    std::size_t enter = cols;
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      if (at(m, c) < -eps) {
        enter = c;
        break;
      }
    }
    if (enter == cols) break;

    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double a = at(r, enter);
      if (a > eps) {
        const double ratio = at(r, cols - 1) / a;
        if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < m && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave == m) throw NumericalError("lp: objective unbounded", sol.pivots);

    const double piv = at(leave, enter);
    for (std::size_t c = 0; c < cols; ++c) at(leave, c) /= piv;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double factor = at(r, enter);
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) at(r, c) -= factor * at(leave, c);
    }
    basis[leave] = enter;
    if (++sol.pivots > max_pivots) throw NumericalError("lp: pivot limit reached", sol.pivots);
  }

  sol.y.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] < n) sol.y[basis[r]] = at(r, cols - 1);
  sol.value = at(m, cols - 1);
  return sol;
}

}  // namespace wmfc::lp
