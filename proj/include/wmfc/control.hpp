#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "wmfc/errors.hpp"
#include "wmfc/measures.hpp"

namespace wmfc {

/// Ensemble statistics available to feedback laws.
struct EnsembleStats {
  double weighted_mean_x = 0.0;  // <mu, id> = E[A X]
  double mass = 0.0;             // <mu, 1> = E[A]
  double mean_x = 0.0;           // E[X]
};

inline EnsembleStats ensemble_stats(std::span<const double> x, std::span<const double> a) {
  EnsembleStats s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s.weighted_mean_x += a[i] * x[i];
    s.mass += a[i];
    s.mean_x += x[i];
  }
  const double n = static_cast<double>(x.size());
  s.weighted_mean_x /= n;
  s.mass /= n;
  s.mean_x /= n;
  return s;
}

/// Deterministic control values u[m], one per grid node.
struct OpenLoop {
  std::vector<double> values;
};

/// u = law(m, t, x, a, stats) evaluated per particle at each node.
struct Feedback {
  std::function<double(std::size_t m, double t, double x, double a, const EnsembleStats& stats)> law;
};

/// A sampled adapted process: values[m][i] for node m and particle i.
struct ProcessControl {
  std::vector<std::vector<double>> values;
};

/// Admissible control: open-loop, feedback, or a realized per-particle process.
class ControlSpec {
 public:
  using Variant = std::variant<OpenLoop, Feedback, ProcessControl>;

  ControlSpec(OpenLoop c) : v_(std::move(c)) {}         // NOLINT(implicit)
  ControlSpec(Feedback c) : v_(std::move(c)) {}         // NOLINT(implicit)
  ControlSpec(ProcessControl c) : v_(std::move(c)) {}   // NOLINT(implicit)

  static ControlSpec constant(double u, std::size_t nodes) { return OpenLoop{std::vector<double>(nodes, u)}; }

  const Variant& variant() const noexcept { return v_; }
  bool is_open_loop() const noexcept { return std::holds_alternative<OpenLoop>(v_); }
  bool is_feedback() const noexcept { return std::holds_alternative<Feedback>(v_); }
  bool is_process() const noexcept { return std::holds_alternative<ProcessControl>(v_); }

  /// Checks the control covers `nodes` grid nodes and `particles` particles.
  void check_shape(std::size_t nodes, std::size_t particles) const {
    if (const auto* o = std::get_if<OpenLoop>(&v_)) {
      require(o->values.size() >= nodes - 1, "control: open-loop values must cover every step");
    } else if (const auto* p = std::get_if<ProcessControl>(&v_)) {
      require(p->values.size() >= nodes - 1, "control: process values must cover every step");
      for (std::size_t m = 0; m + 1 < nodes; ++m)
        require(p->values[m].size() == particles, "control: process values must have one entry per particle");
    } else {
      require(static_cast<bool>(std::get<Feedback>(v_).law), "control: empty feedback law");
    }
  }

  /// Raw (unclipped) value for particle i at node m.
  double value(std::size_t m, std::size_t i, double t, double x, double a, const EnsembleStats& stats) const {
    switch (v_.index()) {
      case 0: {
        const auto& o = std::get<OpenLoop>(v_).values;
        return o[std::min(m, o.size() - 1)];
      }
      case 1:
        return std::get<Feedback>(v_).law(m, t, x, a, stats);
      default: {
        const auto& p = std::get<ProcessControl>(v_).values;
        return p[std::min(m, p.size() - 1)][i];
      }
    }
  }

 private:
  Variant v_;
};

/// u + eps * v for a realized process u and an open-loop direction v.
inline ProcessControl perturb(const ProcessControl& u, const OpenLoop& v, double eps) {
  ProcessControl out = u;
  for (std::size_t m = 0; m < out.values.size(); ++m) {
    const double dv = eps * v.values[std::min(m, v.values.size() - 1)];
    for (double& x : out.values[m]) x += dv;
  }
  return out;
}

}  // namespace wmfc
