#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wmfc/model.hpp"

namespace wmfc {

/// One evaluation point (t, x, a, mu, u) plus a perturbation direction nu for the
/// measure-derivative check.
struct Probe {
  double t = 0.0;
  double x = 0.0;
  double a = 1.0;
  WeightedEnsemble mu;
  WeightedEnsemble nu;
  double u = 0.0;
};

struct ProbeOptions {
  std::size_t count = 64;
  double horizon = 1.0;
  double x_scale = 3.0;
  double a_scale = 3.0;
  double u_scale = 2.0;
  std::size_t measure_atoms = 5;
  std::uint64_t seed = 7;
};

inline std::vector<Probe> make_probes(const Model& model, const ProbeOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ControlDomain dom = model.domain();
  const double ulo = std::max(dom.lo, -opt.u_scale);
  const double uhi = std::min(dom.hi, opt.u_scale);
  auto atoms = [&] {
    std::vector<double> x(opt.measure_atoms), a(opt.measure_atoms);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = opt.x_scale * (2.0 * unit(rng) - 1.0);
      a[i] = 0.2 + 1.8 * unit(rng);
    }
    return WeightedEnsemble(std::move(x), std::move(a));
  };
  std::vector<Probe> out;
  out.reserve(opt.count);
  for (std::size_t n = 0; n < opt.count; ++n) {
    WeightedEnsemble mu = atoms();
    WeightedEnsemble nu = atoms();
    out.push_back(Probe{opt.horizon * unit(rng), opt.x_scale * (2.0 * unit(rng) - 1.0),
                        0.1 + opt.a_scale * unit(rng), std::move(mu), std::move(nu),
                        ulo + (uhi - ulo) * unit(rng)});
  }
  return out;
}

/// Outcome of one consistency or boundedness check.
struct HypothesisCheck {
  std::string name;
  std::string item;       // "derivative" or the hypothesis item it belongs to
  double measured = 0.0;  // max discrepancy or max sampled magnitude
  double limit = 0.0;
  bool passed = true;
  bool blocking = true;   // false: reported as a growth warning only
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed || !c.blocking; });
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (!c.passed && c.blocking) out.push_back(c.name);
    return out;
  }
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (!c.passed && !c.blocking) out.push_back(c.name);
    return out;
  }
  const HypothesisCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct HypothesisOptions {
  double relative_tolerance = 1e-4;
  double bound_limit = 100.0;
  double step = 1e-5;
};

/// Checks supplied partials and measure kernels against central finite differences and
/// records the largest sampled magnitude of every quantity the hypothesis requires bounded.
/// Violations are reported, never thrown.
inline HypothesisReport validate_hypothesis(const Model& model, const std::vector<Probe>& probes,
                                            const HypothesisOptions& opt = {}) {
  require(!probes.empty(), "validate_hypothesis: empty probe set");
  HypothesisReport rep;

  struct Acc {
    double disc = 0.0;
    double mag = 0.0;
  };
  std::vector<std::string> names;
  std::vector<Acc> acc;
  auto slot = [&](const std::string& n) -> Acc& {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return acc[i];
    names.push_back(n);
    acc.push_back({});
    return acc.back();
  };
  auto note_fd = [&](const std::string& n, double analytic, double fd) {
    auto& s = slot(n);
    s.disc = std::max(s.disc, std::abs(analytic - fd) / std::max(1.0, std::abs(analytic)));
  };
  auto note_mag = [&](const std::string& n, double v) {
    auto& s = slot(n);
    s.mag = std::max(s.mag, std::abs(v));
  };

  const std::size_t kf = model.feature_count();
  using JetOf = std::function<Jet(const Dynamics&)>;
  const std::pair<const char*, JetOf> coefficients[] = {
      {"b", [](const Dynamics& d) { return d.b; }},
      {"sigma", [](const Dynamics& d) { return d.sigma; }},
      {"alpha", [](const Dynamics& d) { return d.alpha; }},
      {"beta", [](const Dynamics& d) { return d.beta; }},
  };

  for (const auto& p : probes) {
    const MeasureSummary s = model.summarize(p.mu);
    const MeasureSummary sn = model.summarize(p.nu);
    const double hx = opt.step * std::max(1.0, std::abs(p.x));
    const double hu = opt.step * std::max(1.0, std::abs(p.u));
    const double hm = opt.step;
    auto shifted = [&](double eps) {
      MeasureSummary r = s;
      for (std::size_t k = 0; k < kf; ++k) r[k] += eps * sn[k];
      return r;
    };
    const Dynamics d0 = model.dynamics(p.t, p.x, s, p.u);
    const Dynamics dxp = model.dynamics(p.t, p.x + hx, s, p.u), dxm = model.dynamics(p.t, p.x - hx, s, p.u);
    const Dynamics dup = model.dynamics(p.t, p.x, s, p.u + hu), dum = model.dynamics(p.t, p.x, s, p.u - hu);
    const Dynamics dmp = model.dynamics(p.t, p.x, shifted(hm), p.u);
    const Dynamics dmm = model.dynamics(p.t, p.x, shifted(-hm), p.u);

    for (const auto& [name, get] : coefficients) {
      const std::string n = name;
      const Jet j = get(d0);
      note_fd(n + "_x", j.d_x, (get(dxp).value - get(dxm).value) / (2 * hx));
      note_fd(n + "_u", j.d_u, (get(dup).value - get(dum).value) / (2 * hu));
      const double directional = pair(p.nu, [&](double xp) { return model.kernel(j.d_m, xp); });
      note_fd(n + "_mu", directional, (get(dmp).value - get(dmm).value) / (2 * hm));
      for (std::size_t i = 0; i < p.mu.size(); ++i) {
        const double xp = p.mu.x(i);
        const double hp = opt.step * std::max(1.0, std::abs(xp));
        note_fd(n + "_mu1", model.kernel_dx(j.d_m, xp),
                (model.kernel(j.d_m, xp + hp) - model.kernel(j.d_m, xp - hp)) / (2 * hp));
        note_mag(n + "_mu1 bound", model.kernel_dx(j.d_m, xp));
      }
      note_mag(n + "_x bound", j.d_x);
      note_mag(n + "_u bound", j.d_u);
      if (n == "alpha" || n == "beta") note_mag(n + " bound", j.value);
    }

    const RunningCost c0 = model.running_cost(p.t, p.x, p.a, s, p.u);
    const double ha = opt.step * std::max(1.0, std::abs(p.a));
    auto f = [&](double x, double a, const MeasureSummary& m, double u) {
      return model.running_cost(p.t, x, a, m, u).value;
    };
    note_fd("f_x", c0.d_x, (f(p.x + hx, p.a, s, p.u) - f(p.x - hx, p.a, s, p.u)) / (2 * hx));
    note_fd("f_a", c0.d_a, (f(p.x, p.a + ha, s, p.u) - f(p.x, p.a - ha, s, p.u)) / (2 * ha));
    note_fd("f_u", c0.d_u, (f(p.x, p.a, s, p.u + hu) - f(p.x, p.a, s, p.u - hu)) / (2 * hu));
    note_fd("f_mu", pair(p.nu, [&](double xp) { return model.kernel(c0.d_m, xp); }),
            (f(p.x, p.a, shifted(hm), p.u) - f(p.x, p.a, shifted(-hm), p.u)) / (2 * hm));
    note_mag("f_x bound", c0.d_x);
    note_mag("f_a bound", c0.d_a);
    note_mag("f_u bound", c0.d_u);

    const TerminalCost g0 = model.terminal_cost(p.x, p.a);
    note_fd("Phi_x", g0.d_x,
            (model.terminal_cost(p.x + hx, p.a).value - model.terminal_cost(p.x - hx, p.a).value) / (2 * hx));
    note_fd("Phi_a", g0.d_a,
            (model.terminal_cost(p.x, p.a + ha).value - model.terminal_cost(p.x, p.a - ha).value) / (2 * ha));
    note_mag("Phi_x bound", g0.d_x);
    note_mag("Phi_a bound", g0.d_a);
  }

  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& n = names[i];
    HypothesisCheck c;
    c.name = n;
    if (n.find(" bound") != std::string::npos) {
      c.measured = acc[i].mag;
      c.limit = opt.bound_limit;
      c.passed = c.measured <= c.limit;
      const bool cost = n.rfind("f_", 0) == 0 || n.rfind("Phi", 0) == 0;
      c.blocking = !cost;
      if (n.rfind("alpha", 0) == 0 || n.rfind("beta", 0) == 0)
        c.item = "(2)";
      else if (n.rfind("Phi", 0) == 0)
        c.item = "(4)";
      else if (n.find("mu1") != std::string::npos || n.find("kernel") != std::string::npos)
        c.item = "(3)";
      else
        c.item = "(1)";
    } else {
      c.item = "derivative";
      c.measured = acc[i].disc;
      c.limit = opt.relative_tolerance;
      c.passed = c.measured <= c.limit;
    }
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace wmfc
