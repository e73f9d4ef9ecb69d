#pragma once

#include <cmath>

#include "wmfc/model.hpp"

namespace wmfc::models {

/// Amplitudes of the bounded nonlinear test model. The measure enters through the mass
/// m0 = <mu, 1> and the sine moment m1 = <mu, sin>.
struct SmoothParams {
  // b = kb_x sin x + kb_m tanh m1 + kb_u u
  double kb_x = 0.5, kb_m = 0.8, kb_u = 1.0;
  // sigma = s0 + s_x cos x + s_m sin m1 + s_u tanh u
  double s0 = 0.4, s_x = 0.1, s_m = 0.1, s_u = 0.1;
  // alpha = al0 + al_x cos x + al_m tanh m1 + al_u tanh u
  double al0 = 0.05, al_x = 0.1, al_m = 0.1, al_u = 0.05;
  // beta = be0 + be_x sin x + be_m tanh(m0 - 1) + be_u sin u
  double be0 = 0.2, be_x = 0.05, be_m = 0.05, be_u = 0.05;
  // f = q u^2 / 2 + l_x (1 - cos x) + l_a tanh a + l_m tanh m1
  double q = 1.0, l_x = 0.5, l_a = 0.3, l_m = 0.2;
  // Phi = r_x (1 - cos x) + r_a tanh a
  double r_x = 0.5, r_a = 0.3;
  double u_lo = -2.0, u_hi = 2.0;

  /// All state, measure and control dependence switched off.
  static SmoothParams zero_amplitude() {
    SmoothParams p;
    p.kb_x = p.kb_m = p.kb_u = 0.0;
    p.s_x = p.s_m = p.s_u = 0.0;
    p.al_x = p.al_m = p.al_u = 0.0;
    p.be_x = p.be_m = p.be_u = 0.0;
    p.q = p.l_x = p.l_a = p.l_m = 0.0;
    p.r_x = p.r_a = 0.0;
    return p;
  }
};

class SmoothTestModel final : public Model {
 public:
  explicit SmoothTestModel(SmoothParams p = {}) : p_(p) {
    require(p.u_lo < p.u_hi, "smooth model: empty control domain");
  }

  const SmoothParams& params() const noexcept { return p_; }

  std::size_t feature_count() const override { return 2; }
  double feature(std::size_t k, double x) const override { return k == 0 ? 1.0 : std::sin(x); }
  double feature_dx(std::size_t k, double x) const override { return k == 0 ? 0.0 : std::cos(x); }

  Dynamics dynamics(double, double x, const MeasureSummary& mu, double u) const override {
    const double sx = std::sin(x), cx = std::cos(x);
    const double th1 = std::tanh(mu[1]), sech1 = 1.0 - th1 * th1;
    const double th0 = std::tanh(mu[0] - 1.0), sech0 = 1.0 - th0 * th0;
    const double thu = std::tanh(u), sechu = 1.0 - thu * thu;
    Dynamics d;
    d.b.value = p_.kb_x * sx + p_.kb_m * th1 + p_.kb_u * u;
    d.b.d_x = p_.kb_x * cx;
    d.b.d_u = p_.kb_u;
    d.b.d_m[1] = p_.kb_m * sech1;

    d.sigma.value = p_.s0 + p_.s_x * cx + p_.s_m * std::sin(mu[1]) + p_.s_u * thu;
    d.sigma.d_x = -p_.s_x * sx;
    d.sigma.d_u = p_.s_u * sechu;
    d.sigma.d_m[1] = p_.s_m * std::cos(mu[1]);

    d.alpha.value = p_.al0 + p_.al_x * cx + p_.al_m * th1 + p_.al_u * thu;
    d.alpha.d_x = -p_.al_x * sx;
    d.alpha.d_u = p_.al_u * sechu;
    d.alpha.d_m[1] = p_.al_m * sech1;

    d.beta.value = p_.be0 + p_.be_x * sx + p_.be_m * th0 + p_.be_u * std::sin(u);
    d.beta.d_x = p_.be_x * cx;
    d.beta.d_u = p_.be_u * std::cos(u);
    d.beta.d_m[0] = p_.be_m * sech0;
    return d;
  }

  RunningCost running_cost(double, double x, double a, const MeasureSummary& mu, double u) const override {
    const double tha = std::tanh(a), th1 = std::tanh(mu[1]);
    RunningCost c;
    c.value = 0.5 * p_.q * u * u + p_.l_x * (1.0 - std::cos(x)) + p_.l_a * tha + p_.l_m * th1;
    c.d_x = p_.l_x * std::sin(x);
    c.d_a = p_.l_a * (1.0 - tha * tha);
    c.d_u = p_.q * u;
    c.d_m[1] = p_.l_m * (1.0 - th1 * th1);
    return c;
  }

  TerminalCost terminal_cost(double x, double a) const override {
    const double tha = std::tanh(a);
    return {p_.r_x * (1.0 - std::cos(x)) + p_.r_a * tha, p_.r_x * std::sin(x), p_.r_a * (1.0 - tha * tha)};
  }

  ControlDomain domain() const override { return {p_.u_lo, p_.u_hi}; }

 private:
  SmoothParams p_;
};

}  // namespace wmfc::models
