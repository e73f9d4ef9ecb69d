#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "wmfc/model.hpp"

namespace wmfc::models {

/// Model assembled from callables; unset pieces are identically zero.
/// Used for closed-form instances and ad hoc experiments.
class FunctionalModel final : public Model {
 public:
  using FeatureFn = std::function<double(double)>;
  using DynamicsFn = std::function<Dynamics(double t, double x, const MeasureSummary&, double u)>;
  using RunningFn = std::function<RunningCost(double t, double x, double a, const MeasureSummary&, double u)>;
  using TerminalFn = std::function<TerminalCost(double x, double a)>;

  struct Feature {
    FeatureFn value;
    FeatureFn dx;
  };

  FunctionalModel& with_feature(FeatureFn value, FeatureFn dx) {
    require(features_.size() < kMaxFeatures, "functional model: too many features");
    features_.push_back({std::move(value), std::move(dx)});
    return *this;
  }
  FunctionalModel& with_dynamics(DynamicsFn fn) {
    dynamics_ = std::move(fn);
    return *this;
  }
  FunctionalModel& with_running_cost(RunningFn fn) {
    running_ = std::move(fn);
    return *this;
  }
  FunctionalModel& with_terminal_cost(TerminalFn fn) {
    terminal_ = std::move(fn);
    return *this;
  }
  FunctionalModel& with_domain(ControlDomain d) {
    domain_ = d;
    return *this;
  }

  std::size_t feature_count() const override { return features_.size(); }
  double feature(std::size_t k, double x) const override { return features_[k].value(x); }
  double feature_dx(std::size_t k, double x) const override { return features_[k].dx(x); }

  Dynamics dynamics(double t, double x, const MeasureSummary& mu, double u) const override {
    return dynamics_ ? dynamics_(t, x, mu, u) : Dynamics{};
  }
  RunningCost running_cost(double t, double x, double a, const MeasureSummary& mu, double u) const override {
    return running_ ? running_(t, x, a, mu, u) : RunningCost{};
  }
  TerminalCost terminal_cost(double x, double a) const override {
    return terminal_ ? terminal_(x, a) : TerminalCost{};
  }
  ControlDomain domain() const override { return domain_; }

 private:
  std::vector<Feature> features_;
  DynamicsFn dynamics_;
  RunningFn running_;
  TerminalFn terminal_;
  ControlDomain domain_;
};

/// Constant b, sigma, alpha, beta with zero cost.
inline FunctionalModel constant_model(double b, double sigma, double alpha, double beta) {
  FunctionalModel m;
  m.with_dynamics([=](double, double, const MeasureSummary&, double) {
    Dynamics d;
    d.b.value = b;
    d.sigma.value = sigma;
    d.alpha.value = alpha;
    d.beta.value = beta;
    return d;
  });
  return m;
}

/// b = sigma = alpha = beta = 0 with f = x (or f = a) and Phi = 0: the adjoint equations
/// then have deterministic drivers and closed-form solutions.
inline FunctionalModel decoupled_linear_cost(bool cost_in_weight) {
  FunctionalModel m;
  m.with_running_cost([cost_in_weight](double, double x, double a, const MeasureSummary&, double) {
    RunningCost c;
    if (cost_in_weight) {
      c.value = a;
      c.d_a = 1.0;
    } else {
      c.value = x;
      c.d_x = 1.0;
    }
    return c;
  });
  return m;
}

/// b = u, alpha = u, sigma = beta = 0, f = x + a, Phi = 0. Along u = 0 both adjoints are
/// -(T - t) and the variations are Y = int v, B = a0 int v, so the duality sums telescope exactly.
inline FunctionalModel decoupled_control_model() {
  FunctionalModel m;
  m.with_dynamics([](double, double, const MeasureSummary&, double u) {
    Dynamics d;
    d.b.value = u;
    d.b.d_u = 1.0;
    d.alpha.value = u;
    d.alpha.d_u = 1.0;
    return d;
  });
  m.with_running_cost([](double, double x, double a, const MeasureSummary&, double) {
    RunningCost c;
    c.value = x + a;
    c.d_x = 1.0;
    c.d_a = 1.0;
    return c;
  });
  return m;
}

}  // namespace wmfc::models
