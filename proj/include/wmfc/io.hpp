#pragma once

#include <iomanip>
#include <ostream>
#include <vector>

#include "json.hpp"

#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/lq_solver.hpp"
#include "wmfc/variation.hpp"

namespace wmfc::io {

inline void write_path_csv(std::ostream& os, const EnsemblePath& p) {
  os << "t,particle,x,a\n" << std::setprecision(17);
  for (std::size_t m = 0; m < p.nodes(); ++m)
    for (std::size_t i = 0; i < p.particles(); ++i)
      os << p.grid.t(m) << ',' << i << ',' << p.x[m][i] << ',' << p.a[m][i] << '\n';
}

inline void write_summary_csv(std::ostream& os, const EnsemblePath& p) {
  os << "t,mean_x,mass,weighted_mean_x\n" << std::setprecision(17);
  for (std::size_t m = 0; m < p.nodes(); ++m)
    os << p.grid.t(m) << ',' << p.stats[m].mean_x << ',' << p.stats[m].mass << ',' << p.stats[m].weighted_mean_x
       << '\n';
}

inline void write_adjoint_csv(std::ostream& os, const AdjointEnsemble& adj) {
  os << "t,particle,p,q,P,Q\n" << std::setprecision(17);
  for (std::size_t m = 0; m < adj.grid.nodes(); ++m)
    for (std::size_t i = 0; i < adj.p[m].size(); ++i)
      os << adj.grid.t(m) << ',' << i << ',' << adj.p[m][i] << ',' << adj.q[m][i] << ',' << adj.P[m][i] << ','
         << adj.Q[m][i] << '\n';
}

struct GateauxRow {
  std::size_t direction;
  double epsilon;
  double fd_quotient, fd_se;
  double analytic, analytic_se;
  double via_hamiltonian, via_hamiltonian_se;
};

inline void write_gateaux_csv(std::ostream& os, const std::vector<GateauxRow>& rows) {
  os << "epsilon,fd_quotient,analytic,via_hamiltonian,direction,fd_se,analytic_se,via_hamiltonian_se\n"
     << std::setprecision(17);
  for (const auto& r : rows)
    os << r.epsilon << ',' << r.fd_quotient << ',' << r.analytic << ',' << r.via_hamiltonian << ',' << r.direction
       << ',' << r.fd_se << ',' << r.analytic_se << ',' << r.via_hamiltonian_se << '\n';
}

inline void write_riccati_csv(std::ostream& os, const lq::RiccatiPath& r, const lq::CoefficientProcesses& cp) {
  os << "t,phi,E_varphi,E_Avarphi,E_chi,E_Achi,E_psi,E_Apsi\n" << std::setprecision(17);
  for (std::size_t m = 0; m < r.grid.nodes(); ++m)
    os << r.grid.t(m) << ',' << r.phi[m] << ',' << cp.E_varphi[m] << ',' << cp.E_Avarphi[m] << ',' << cp.E_chi[m]
       << ',' << cp.E_Achi[m] << ',' << cp.E_psi[m] << ',' << cp.E_Apsi[m] << '\n';
}

inline void write_moments_csv(std::ostream& os, const lq::MomentPath& mp) {
  os << "t,EX,EAX\n" << std::setprecision(17);
  for (std::size_t m = 0; m < mp.grid.nodes(); ++m) os << mp.grid.t(m) << ',' << mp.EX[m] << ',' << mp.EAX[m] << '\n';
}

inline nlohmann::json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline nlohmann::json verification_json(const lq::VerificationReport& r) {
  auto panel = nlohmann::json::array();
  for (const auto& e : r.panel)
    panel.push_back({{"direction", e.direction},
                     {"epsilon", e.epsilon},
                     {"J_perturbed", e.J_perturbed.value},
                     {"difference", e.difference.value},
                     {"difference_se", e.difference.se},
                     {"passed", e.passed}});
  return {{"lambda", r.lambda},
          {"EXT", r.EXT.value},
          {"EXT_se", r.EXT.se},
          {"J_star", r.J_star.value},
          {"J_star_se", r.J_star.se},
          {"smp_residual", r.smp.sup},
          {"panel", panel}};
}

}  // namespace wmfc::io
