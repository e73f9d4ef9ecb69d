#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wmfc/errors.hpp"
#include "wmfc/lp.hpp"

namespace wmfc {

/// N particles (x_i, a_i) standing for the weighted measure <mu, f> = N^-1 sum a_i f(x_i).
class WeightedEnsemble {
 public:
  WeightedEnsemble(std::vector<double> x, std::vector<double> a, std::size_t time_index = 0)
      : x_(std::move(x)), a_(std::move(a)), time_index_(time_index) {
    require(!x_.empty(), "ensemble: at least one particle required");
    require(x_.size() == a_.size(), "ensemble: state and weight counts differ");
    for (std::size_t i = 0; i < a_.size(); ++i) {
      require(std::isfinite(x_[i]), "ensemble: non-finite state");
      require(std::isfinite(a_[i]) && a_[i] > 0.0, "ensemble: weights must be finite and positive");
    }
  }

  std::size_t size() const noexcept { return x_.size(); }
  std::size_t time_index() const noexcept { return time_index_; }
  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& a() const noexcept { return a_; }
  double x(std::size_t i) const noexcept { return x_[i]; }
  double a(std::size_t i) const noexcept { return a_[i]; }

 private:
  std::vector<double> x_;
  std::vector<double> a_;
  std::size_t time_index_;
};

/// <mu, f> = N^-1 sum_i a_i f(x_i).
template <class F>
double pair(const WeightedEnsemble& e, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += e.a(i) * f(e.x(i));
  return s / static_cast<double>(e.size());
}

inline double total_mass(const WeightedEnsemble& e) {
  return pair(e, [](double) { return 1.0; });
}

namespace detail {

/// Signed atoms of mu1 - mu2 on the merged, sorted support.
inline std::vector<std::pair<double, double>> signed_atoms(const WeightedEnsemble& e1, const WeightedEnsemble& e2) {
  std::vector<std::pair<double, double>> raw;
  raw.reserve(e1.size() + e2.size());
  const double n1 = static_cast<double>(e1.size());
  const double n2 = static_cast<double>(e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) raw.emplace_back(e1.x(i), e1.a(i) / n1);
  for (std::size_t j = 0; j < e2.size(); ++j) raw.emplace_back(e2.x(j), -e2.a(j) / n2);
  std::sort(raw.begin(), raw.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<std::pair<double, double>> atoms;
  for (const auto& [x, w] : raw) {
    if (!atoms.empty() && atoms.back().first == x)
      atoms.back().second += w;
    else
      atoms.emplace_back(x, w);
  }
  return atoms;
}

}  // namespace detail

/// Bounded-Lipschitz distance by the dual linear program over the merged support:
/// variables f(z_k), constraints |f| <= 1 and |f(z_k) - f(z_l)| <= |z_k - z_l| for every pair.
inline double bl_distance_lp(const WeightedEnsemble& e1, const WeightedEnsemble& e2) {
  const auto atoms = detail::signed_atoms(e1, e2);
  const std::size_t k = atoms.size();
  // Shift f = y - 1 so that y in [0, 2] and y = 0 is feasible.
  lp::Problem prob;
  prob.vars = k;
  prob.objective.resize(k);
  double offset = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    prob.objective[i] = atoms[i].second;
    offset += atoms[i].second;
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> row(k, 0.0);
    row[i] = 1.0;
    prob.rows.push_back(std::move(row));
    prob.rhs.push_back(2.0);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<double> row(k, 0.0);
      row[i] = 1.0;
      row[j] = -1.0;
      prob.rows.push_back(std::move(row));
      prob.rhs.push_back(std::abs(atoms[i].first - atoms[j].first));
    }
  }
  const auto sol = lp::maximize(prob);
  // The test class is symmetric under f -> -f, so the sup of |.| is the max.
  return std::max(0.0, sol.value - offset);
}

/// Same quantity by exact dynamic programming along the sorted support. In one dimension only
/// neighbouring Lipschitz constraints bind, and the value function of the prefix problem is
/// concave piecewise linear in the last coordinate, so it is carried as a breakpoint list.
inline double bl_distance_chain(const WeightedEnsemble& e1, const WeightedEnsemble& e2) {
  const auto atoms = detail::signed_atoms(e1, e2);
  using Pt = std::pair<double, double>;  // (f value, best prefix objective)
  std::vector<Pt> v{{-1.0, -atoms[0].second}, {1.0, atoms[0].second}};
  std::vector<Pt> next;

  auto interpolate = [](const std::vector<Pt>& pts, double g) {
    if (g <= pts.front().first) return pts.front().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (g <= pts[i].first) {
        const auto& [x0, y0] = pts[i - 1];
        const auto& [x1, y1] = pts[i];
        if (x1 == x0) return std::max(y0, y1);
        return y0 + (y1 - y0) * (g - x0) / (x1 - x0);
      }
    }
    return pts.back().second;
  };

  for (std::size_t k = 1; k < atoms.size(); ++k) {
    const double gap = atoms[k].first - atoms[k - 1].first;
    const double w = atoms[k].second;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].second > v[peak].second) peak = i;

    // Window maximum: left branch shifts left by gap, right branch right by gap.
    std::vector<Pt> shifted;
    shifted.reserve(v.size() + 1);
    for (std::size_t i = 0; i <= peak; ++i) shifted.emplace_back(v[i].first - gap, v[i].second);
    for (std::size_t i = peak; i < v.size(); ++i) shifted.emplace_back(v[i].first + gap, v[i].second);

    next.clear();
    next.emplace_back(-1.0, interpolate(shifted, -1.0));
    for (const auto& p : shifted)
      if (p.first > -1.0 && p.first < 1.0 && p.first > next.back().first) next.push_back(p);
    next.emplace_back(1.0, interpolate(shifted, 1.0));
    for (auto& p : next) p.second += w * p.first;
    v.swap(next);
  }
  double best = v.front().second;
  for (const auto& p : v) best = std::max(best, p.second);
  return std::max(0.0, best);
}

/// Merged supports up to this size use the LP; larger ones use the exact chain recursion.
inline constexpr std::size_t kBlLpSupportLimit = 64;

/// rho(mu1, mu2) = sup over 1-Lipschitz f with |f| <= 1 of |<mu1, f> - <mu2, f>|.
inline double bl_distance(const WeightedEnsemble& e1, const WeightedEnsemble& e2) {
  if (detail::signed_atoms(e1, e2).size() <= kBlLpSupportLimit) return bl_distance_lp(e1, e2);
  return bl_distance_chain(e1, e2);
}

inline void write_ensemble_csv(std::ostream& os, const WeightedEnsemble& e) {
  os << "particle,x,a\n" << std::setprecision(17);
  for (std::size_t i = 0; i < e.size(); ++i) os << i << ',' << e.x(i) << ',' << e.a(i) << '\n';
}

inline WeightedEnsemble read_ensemble_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "ensemble csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "particle,x,a", "ensemble csv: header must be 'particle,x,a'");
  std::vector<double> x, a;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string idx, xs, as;
    require(std::getline(row, idx, ',') && std::getline(row, xs, ',') && std::getline(row, as),
            "ensemble csv: malformed row '" + line + "'");
    require(std::stoull(idx) == x.size(), "ensemble csv: particle indices must be consecutive from 0");
    x.push_back(std::stod(xs));
    a.push_back(std::stod(as));
  }
  return WeightedEnsemble(std::move(x), std::move(a));
}

}  // namespace wmfc
