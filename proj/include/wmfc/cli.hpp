#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "wmfc/acceptance.hpp"
#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/io.hpp"
#include "wmfc/lq_solver.hpp"
#include "wmfc/models/lq.hpp"
#include "wmfc/models/smooth.hpp"
#include "wmfc/variation.hpp"

namespace wmfc::cli {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& experiments() {
  static const std::vector<std::string> e{"simulate", "picard",   "adjoint",      "gateaux",
                                          "duality",  "lq-solve", "smp-residual", "acceptance-suite"};
  return e;
}

struct SolverKnobs {
  int basis_degree = 2;
  double picard_tol = 1e-8;
  std::size_t picard_max_iter = 15;
  std::vector<double> epsilons{1e-3, 5e-4};
  std::size_t directions = 5;
  std::size_t panel_size = 20;
  KernelMode kernel = KernelMode::Factorized;
  lq::Scheme scheme = lq::Scheme::Discrete;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string experiment;
  std::string model = "lq";
  models::LQScenario lq;
  double lambda = 0.0;  // multiplier of the lq model outside lq-solve
  models::SmoothParams smooth;
  double x0 = 0.0, a0 = 1.0;  // smooth-test initial state
  double control = 0.0;        // constant open-loop control
  double T = 1.0;
  long long M = 100;
  long long N = 10000;
  std::uint64_t seed = 20240611;
  SolverKnobs solver;
  bool write_paths = false;
  std::vector<std::string> groups = acceptance::all_groups();
  std::optional<long long> grid_override;
  std::string out = "runs";
  unsigned threads = 1;

  double initial_x() const { return model == "lq" ? lq.x0 : x0; }
  double initial_a() const { return model == "lq" ? lq.a0 : a0; }
};

namespace detail {

inline void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  require(j.is_object(), "config: '" + where + "' must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* name : keys) ok = ok || k == name;
    require(ok, "config: unknown key '" + k + "' in " + where);
  }
}

inline double number(const nlohmann::json& j, const std::string& key) {
  require(j.at(key).is_number(), "config: '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline long long integer(const nlohmann::json& j, const std::string& key) {
  require(j.at(key).is_number_integer(), "config: '" + key + "' must be an integer");
  return j.at(key).get<long long>();
}

inline models::SmoothParams smooth_from_json(const nlohmann::json& j) {
  models::SmoothParams p;
  std::map<std::string, double*> fields{
      {"kb_x", &p.kb_x}, {"kb_m", &p.kb_m}, {"kb_u", &p.kb_u}, {"s0", &p.s0},     {"s_x", &p.s_x},
      {"s_m", &p.s_m},   {"s_u", &p.s_u},   {"al0", &p.al0},   {"al_x", &p.al_x}, {"al_m", &p.al_m},
      {"al_u", &p.al_u}, {"be0", &p.be0},   {"be_x", &p.be_x}, {"be_m", &p.be_m}, {"be_u", &p.be_u},
      {"q", &p.q},       {"l_x", &p.l_x},   {"l_a", &p.l_a},   {"l_m", &p.l_m},   {"r_x", &p.r_x},
      {"r_a", &p.r_a},   {"u_lo", &p.u_lo}, {"u_hi", &p.u_hi}};
  require(j.is_object(), "config: smooth-test params must be an object");
  for (const auto& [k, v] : j.items()) {
    auto it = fields.find(k);
    require(it != fields.end(), "config: unknown smooth-test parameter '" + k + "'");
    require(v.is_number(), "config: smooth-test parameter '" + k + "' must be a number");
    *it->second = v.get<double>();
  }
  require(p.u_lo < p.u_hi, "config: smooth-test control domain is empty");
  return p;
}

inline nlohmann::json smooth_to_json(const models::SmoothParams& p) {
  return {{"kb_x", p.kb_x}, {"kb_m", p.kb_m}, {"kb_u", p.kb_u}, {"s0", p.s0},     {"s_x", p.s_x},
          {"s_m", p.s_m},   {"s_u", p.s_u},   {"al0", p.al0},   {"al_x", p.al_x}, {"al_m", p.al_m},
          {"al_u", p.al_u}, {"be0", p.be0},   {"be_x", p.be_x}, {"be_m", p.be_m}, {"be_u", p.be_u},
          {"q", p.q},       {"l_x", p.l_x},   {"l_a", p.l_a},   {"l_m", p.l_m},   {"r_x", p.r_x},
          {"r_a", p.r_a},   {"u_lo", p.u_lo}, {"u_hi", p.u_hi}};
}

}  // namespace detail

/// Parses and validates a scenario. Every check happens here, before any computation.
inline ScenarioConfig parse_config(const nlohmann::json& j) {
  using detail::integer;
  using detail::number;
  detail::only_keys(j, "config",
                    {"schema_version", "experiment", "model", "grid", "N", "seed", "control", "solver",
                     "write_paths", "acceptance", "out"});
  ScenarioConfig c;
  require(j.contains("schema_version"), "config: missing 'schema_version'");
  c.schema_version = static_cast<int>(integer(j, "schema_version"));
  require(c.schema_version == kSchemaVersion,
          "config: unsupported schema_version " + std::to_string(c.schema_version));

  if (j.contains("experiment")) {
    require(j.at("experiment").is_string(), "config: 'experiment' must be a string");
    c.experiment = j.at("experiment").get<std::string>();
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    detail::only_keys(m, "model", {"kind", "params", "lambda", "x0", "a0"});
    if (m.contains("kind")) {
      require(m.at("kind").is_string(), "config: model 'kind' must be a string");
      c.model = m.at("kind").get<std::string>();
    }
    require(c.model == "lq" || c.model == "smooth-test", "config: unknown model '" + c.model + "'");
    const nlohmann::json params = m.value("params", nlohmann::json::object());
    if (c.model == "lq") {
      c.lq = models::lq_scenario_from_json(params);
      require(!m.contains("x0") && !m.contains("a0"), "config: lq initial state belongs in model params");
      if (m.contains("lambda")) c.lambda = number(m, "lambda");
    } else {
      c.smooth = detail::smooth_from_json(params);
      require(!m.contains("lambda"), "config: 'lambda' applies to the lq model only");
      if (m.contains("x0")) c.x0 = number(m, "x0");
      if (m.contains("a0")) c.a0 = number(m, "a0");
    }
  }
  require(std::isfinite(c.x0) && std::isfinite(c.a0) && c.a0 > 0.0, "config: need finite x0 and a0 > 0");
  require(std::isfinite(c.lambda), "config: lambda must be finite");

  c.T = c.model == "lq" ? c.lq.T : 1.0;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::only_keys(g, "grid", {"T", "M"});
    if (g.contains("T")) c.T = number(g, "T");
    if (g.contains("M")) c.M = integer(g, "M");
  }
  require(std::isfinite(c.T) && c.T > 0.0, "config: grid T must be positive");
  require(c.M >= 1, "config: grid M must be at least 1 (got " + std::to_string(c.M) + ")");
  if (c.model == "lq") {
    const bool lq_T = j.contains("model") && j.at("model").contains("params") && j.at("model").at("params").contains("T");
    require(!lq_T || c.T == c.lq.T, "config: grid T and lq params T disagree");
    c.lq.T = c.T;
  }

  if (j.contains("N")) c.N = integer(j, "N");
  require(c.N >= 2, "config: N must be at least 2");
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0),
            "config: 'seed' must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("control")) {
    const auto& u = j.at("control");
    detail::only_keys(u, "control", {"kind", "value"});
    require(u.value("kind", std::string("constant")) == "constant", "config: only constant controls are supported");
    if (u.contains("value")) c.control = number(u, "value");
  }
  require(std::isfinite(c.control), "config: control value must be finite");
  if (c.model == "smooth-test")
    require(c.control >= c.smooth.u_lo && c.control <= c.smooth.u_hi, "config: control outside the control domain");

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    detail::only_keys(s, "solver",
                      {"basis_degree", "picard_tol", "picard_max_iter", "epsilons", "directions", "panel_size",
                       "kernel", "scheme"});
    if (s.contains("basis_degree")) c.solver.basis_degree = static_cast<int>(integer(s, "basis_degree"));
    if (s.contains("picard_tol")) c.solver.picard_tol = number(s, "picard_tol");
    if (s.contains("picard_max_iter")) {
      const long long it = integer(s, "picard_max_iter");
      require(it >= 1, "config: picard_max_iter must be at least 1");
      c.solver.picard_max_iter = static_cast<std::size_t>(it);
    }
    if (s.contains("epsilons")) {
      require(s.at("epsilons").is_array(), "config: 'epsilons' must be an array");
      c.solver.epsilons.clear();
      for (const auto& e : s.at("epsilons")) {
        require(e.is_number(), "config: epsilons must be numbers");
        c.solver.epsilons.push_back(e.get<double>());
      }
    }
    if (s.contains("directions")) {
      const long long d = integer(s, "directions");
      require(d >= 1, "config: directions must be at least 1");
      c.solver.directions = static_cast<std::size_t>(d);
    }
    if (s.contains("panel_size")) {
      const long long p = integer(s, "panel_size");
      require(p >= 0, "config: panel_size must be nonnegative");
      c.solver.panel_size = static_cast<std::size_t>(p);
    }
    if (s.contains("kernel")) {
      const std::string k = s.at("kernel").is_string() ? s.at("kernel").get<std::string>() : "";
      require(k == "factorized" || k == "double-loop", "config: kernel must be 'factorized' or 'double-loop'");
      c.solver.kernel = k == "factorized" ? KernelMode::Factorized : KernelMode::DoubleLoop;
    }
    if (s.contains("scheme")) {
      const std::string k = s.at("scheme").is_string() ? s.at("scheme").get<std::string>() : "";
      require(k == "discrete" || k == "continuous", "config: scheme must be 'discrete' or 'continuous'");
      c.solver.scheme = k == "discrete" ? lq::Scheme::Discrete : lq::Scheme::Continuous;
    }
  }
  require(c.solver.basis_degree >= 0 && c.solver.basis_degree <= 6, "config: basis_degree must lie in [0, 6]");
  require(c.solver.picard_tol > 0.0, "config: picard_tol must be positive");
  require(!c.solver.epsilons.empty(), "config: epsilons must not be empty");
  for (double e : c.solver.epsilons) require(e > 0.0 && std::isfinite(e), "config: epsilons must be positive");

  if (j.contains("write_paths")) {
    require(j.at("write_paths").is_boolean(), "config: 'write_paths' must be a boolean");
    c.write_paths = j.at("write_paths").get<bool>();
  }
  if (j.contains("acceptance")) {
    const auto& a = j.at("acceptance");
    detail::only_keys(a, "acceptance", {"groups", "grid_override"});
    if (a.contains("groups")) {
      require(a.at("groups").is_array(), "config: acceptance 'groups' must be an array");
      c.groups.clear();
      for (const auto& g : a.at("groups")) {
        require(g.is_string(), "config: acceptance groups must be strings");
        c.groups.push_back(g.get<std::string>());
      }
    }
    if (a.contains("grid_override") && !a.at("grid_override").is_null()) c.grid_override = integer(a, "grid_override");
  }
  if (j.contains("out")) {
    require(j.at("out").is_string() && !j.at("out").get<std::string>().empty(), "config: 'out' must be a path");
    c.out = j.at("out").get<std::string>();
  }
  return c;
}

/// Checks that depend on the experiment chosen on the command line.
inline void validate_for(const ScenarioConfig& c) {
  const auto& e = experiments();
  require(std::find(e.begin(), e.end(), c.experiment) != e.end(), "config: unknown experiment '" + c.experiment + "'");
  require(c.threads >= 1, "config: threads must be at least 1");
  if (c.experiment == "lq-solve") require(c.model == "lq", "config: lq-solve needs the lq model");
  if (c.experiment == "acceptance-suite") {
    acceptance::AcceptanceConfig ac;
    ac.groups = c.groups;
    if (c.grid_override) {
      require(*c.grid_override >= 1, "config: grid_override must be at least 1");
      ac.grid_override = static_cast<std::size_t>(*c.grid_override);
    }
    ac.validate();
  }
  if (c.experiment == "gateaux" && c.model == "smooth-test") {
    const double emax = *std::max_element(c.solver.epsilons.begin(), c.solver.epsilons.end());
    require(c.control - emax >= c.smooth.u_lo && c.control + emax <= c.smooth.u_hi,
            "config: control plus the largest epsilon leaves the control domain");
  }
}

/// Canonical echo of the resolved scenario. Excludes threads and the output root, which do not
/// change results.
inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json model{{"kind", c.model}};
  if (c.model == "lq") {
    model["params"] = models::lq_scenario_to_json(c.lq);
    model["lambda"] = c.lambda;
  } else {
    model["params"] = detail::smooth_to_json(c.smooth);
    model["x0"] = c.x0;
    model["a0"] = c.a0;
  }
  nlohmann::json solver{{"basis_degree", c.solver.basis_degree},
                        {"picard_tol", c.solver.picard_tol},
                        {"picard_max_iter", c.solver.picard_max_iter},
                        {"epsilons", c.solver.epsilons},
                        {"directions", c.solver.directions},
                        {"panel_size", c.solver.panel_size},
                        {"kernel", c.solver.kernel == KernelMode::Factorized ? "factorized" : "double-loop"},
                        {"scheme", c.solver.scheme == lq::Scheme::Discrete ? "discrete" : "continuous"}};
  nlohmann::json acc{{"groups", c.groups}};
  acc["grid_override"] = c.grid_override ? nlohmann::json(*c.grid_override) : nlohmann::json(nullptr);
  return {{"schema_version", c.schema_version},
          {"experiment", c.experiment},
          {"model", model},
          {"grid", {{"T", c.T}, {"M", c.M}}},
          {"N", c.N},
          {"seed", c.seed},
          {"control", {{"kind", "constant"}, {"value", c.control}}},
          {"solver", solver},
          {"write_paths", c.write_paths},
          {"acceptance", acc}};
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

/// Files produced by an experiment, in memory until the run directory is known.
class Artifacts {
 public:
  std::ostream& open(const std::string& name) {
    auto& s = files_[name];
    s.str({});
    return s;
  }
  void json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }
  const std::map<std::string, std::ostringstream>& files() const { return files_; }

 private:
  std::map<std::string, std::ostringstream> files_;
};

struct RunResult {
  int status = 0;  // 0 ok, 1 acceptance failures
  std::filesystem::path dir;
  nlohmann::json manifest;
};

namespace detail {

inline std::unique_ptr<Model> make_model(const ScenarioConfig& c) {
  if (c.model == "lq") return std::make_unique<models::LqModel>(c.lq, c.lambda);
  return std::make_unique<models::SmoothTestModel>(c.smooth);
}

inline OpenLoop constant_control(const TimeGrid& g, double u) { return OpenLoop{std::vector<double>(g.nodes(), u)}; }

inline void write_adjoint_means(std::ostream& os, const AdjointEnsemble& adj) {
  os << "t,mean_p,mean_q,mean_P,mean_Q\n" << std::setprecision(17);
  for (std::size_t m = 0; m < adj.grid.nodes(); ++m) {
    auto mean = [](const std::vector<double>& v) { return estimate(v).value; };
    os << adj.grid.t(m) << ',' << mean(adj.p[m]) << ',' << mean(adj.q[m]) << ',' << mean(adj.P[m]) << ','
       << mean(adj.Q[m]) << '\n';
  }
}

inline void write_smp(std::ostream& os, const TimeGrid& g, const SmpResidual& r) {
  os << "t,mean_abs_H_u,se\n" << std::setprecision(17);
  for (std::size_t m = 0; m < r.per_node.size(); ++m)
    os << g.t(m) << ',' << r.per_node[m].value << ',' << r.per_node[m].se << '\n';
}

inline nlohmann::json warnings_json(const std::vector<std::string>& w) { return nlohmann::json(w); }

}  // namespace detail

/// Runs the experiment and fills the artifact set. Returns 1 when an acceptance criterion fails.
inline int execute(const ScenarioConfig& c, Artifacts& out) {
  const TimeGrid grid = build_grid(c.T, c.M);
  const SimulationOptions so{c.threads};
  AdjointOptions ao;
  ao.basis_degree = c.solver.basis_degree;
  ao.kernel_mode = c.solver.kernel;
  ao.threads = c.threads;
  const double x0 = c.initial_x(), a0 = c.initial_a();

  if (c.experiment == "acceptance-suite") {
    acceptance::AcceptanceConfig ac;
    ac.groups = c.groups;
    ac.seed = c.seed;
    ac.threads = c.threads;
    if (c.grid_override) ac.grid_override = static_cast<std::size_t>(*c.grid_override);
    const auto results = acceptance::run(ac);
    const bool ok = acceptance::all_passed(results);
    out.json("acceptance.json", {{"passed", ok}, {"criteria", acceptance::to_json(results)}});
    return ok ? 0 : 1;
  }

  if (c.experiment == "lq-solve") {
    const NoiseBundle noise = sample_noise(grid, c.N, c.seed, 0, c.threads);
    lq::LqOptions lo;
    lo.coefficients.basis_degree = c.solver.basis_degree;
    lo.scheme = c.solver.scheme;
    const lq::LqSolution sol = lq::solve_lq(c.lq, noise, lo);
    lq::VerifyOptions vo;
    vo.panel_size = c.solver.panel_size;
    vo.panel_seed = c.seed + 1;
    vo.basis_degree = c.solver.basis_degree;
    vo.threads = c.threads;
    const lq::VerificationReport rep = lq::verify_optimality(c.lq, sol.lambda, lq::synthesize_feedback(c.lq, sol),
                                                             noise, vo);
    io::write_riccati_csv(out.open("riccati.csv"), sol.riccati, sol.processes);
    io::write_moments_csv(out.open("moments.csv"), sol.moments);
    nlohmann::json v = io::verification_json(rep);
    v["constraint_ok"] = rep.constraint_ok();
    v["panel_ok"] = rep.panel_ok();
    std::vector<std::string> warnings = sol.processes.warnings;
    warnings.insert(warnings.end(), rep.warnings.begin(), rep.warnings.end());
    v["warnings"] = warnings;
    out.json("verification.json", v);
    return 0;
  }

  const auto model = detail::make_model(c);
  const NoiseBundle noise = sample_noise(grid, c.N, c.seed, 0, c.threads);
  const OpenLoop u = detail::constant_control(grid, c.control);

  if (c.experiment == "picard") {
    const PicardResult pr =
        picard_solve(*model, ControlSpec(u), x0, a0, noise, c.solver.picard_tol, c.solver.picard_max_iter,
                     std::nullopt, so);
    auto& os = out.open("picard.csv");
    os << "iteration,residual\n" << std::setprecision(17);
    for (std::size_t n = 0; n < pr.report.residuals.size(); ++n) os << n + 1 << ',' << pr.report.residuals[n] << '\n';
    io::write_summary_csv(out.open("summary.csv"), pr.path);
    out.json("picard.json", {{"converged", pr.report.converged},
                             {"iterations", pr.report.iterations},
                             {"final_residual", pr.report.residuals.back()}});
    return 0;
  }

  const EnsemblePath path = simulate(*model, ControlSpec(u), x0, a0, noise, so);

  if (c.experiment == "simulate") {
    io::write_summary_csv(out.open("summary.csv"), path);
    if (c.write_paths) io::write_path_csv(out.open("paths.csv"), path);
    out.json("cost.json", {{"J", io::estimate_json(evaluate_cost(path, *model))}});
    return 0;
  }

  const AdjointEnsemble adj = solve_adjoint(*model, path, noise, ao);

  if (c.experiment == "adjoint") {
    detail::write_adjoint_means(out.open("adjoint.csv"), adj);
    if (c.write_paths) io::write_adjoint_csv(out.open("adjoint_paths.csv"), adj);
    out.json("adjoint.json", {{"fallbacks", adj.fallbacks}, {"warnings", adj.warnings}});
    return 0;
  }

  if (c.experiment == "smp-residual") {
    const SmpResidual r = smp_residual(*model, path, adj);
    detail::write_smp(out.open("smp.csv"), grid, r);
    out.json("smp.json", {{"sup", r.sup}, {"argsup_t", grid.t(r.argsup)}});
    return 0;
  }

  std::mt19937_64 rng(c.seed + 1);
  const VariationOptions vopt{c.solver.kernel, c.threads};

  if (c.experiment == "gateaux") {
    std::vector<io::GateauxRow> rows;
    for (std::size_t k = 0; k < c.solver.directions; ++k) {
      const OpenLoop v = lq::random_direction(grid, rng);
      const VariationEnsemble var = simulate_variation(*model, path, v, noise, vopt);
      const Estimate an = gateaux_analytic(*model, path, var);
      const Estimate vh = gateaux_via_hamiltonian(*model, path, adj, v);
      for (const auto& q : gateaux_fd(*model, path, v, c.solver.epsilons, x0, a0, noise, so))
        rows.push_back({k, q.epsilon, q.quotient.value, q.quotient.se, an.value, an.se, vh.value, vh.se});
    }
    io::write_gateaux_csv(out.open("gateaux.csv"), rows);
    return 0;
  }

  if (c.experiment == "duality") {
    auto arr = nlohmann::json::array();
    for (std::size_t k = 0; k < c.solver.directions; ++k) {
      const OpenLoop v = lq::random_direction(grid, rng);
      const DualityResult d = duality_check(*model, path, adj, simulate_variation(*model, path, v, noise, vopt));
      arr.push_back({{"direction", k},
                     {"p_terminal", io::estimate_json(d.p_terminal)},
                     {"p_integral", io::estimate_json(d.p_integral)},
                     {"p_residual", d.p_residual()},
                     {"p_se", d.p_se()},
                     {"P_terminal", io::estimate_json(d.P_terminal)},
                     {"P_integral", io::estimate_json(d.P_integral)},
                     {"P_residual", d.P_residual()},
                     {"P_se", d.P_se()}});
    }
    out.json("duality.json", arr);
    return 0;
  }
  throw ValidationError("config: unknown experiment '" + c.experiment + "'");
}

/// Executes the experiment, then writes its artifacts and manifest.json into
/// <out>/<experiment>-<hash of the resolved config>.
inline RunResult run(const ScenarioConfig& c) {
  validate_for(c);
  const nlohmann::json echo = to_json(c);
  const std::string digest = sha256_hex(echo.dump());
  Artifacts art;
  art.json("config.json", echo);
  const int status = execute(c, art);

  RunResult r;
  r.status = status;
  r.dir = std::filesystem::path(c.out) / (c.experiment + "-" + digest.substr(0, 16));
  std::filesystem::create_directories(r.dir);
  auto files = nlohmann::json::array();
  for (const auto& [name, s] : art.files()) {
    const std::string bytes = s.str();
    std::ofstream f(r.dir / name, std::ios::binary);
    f << bytes;
    require(static_cast<bool>(f), "run: cannot write " + (r.dir / name).string());
    files.push_back({{"file", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
  }
  r.manifest = {{"schema_version", kSchemaVersion},
                {"experiment", c.experiment},
                {"config_sha256", digest},
                {"status", status == 0 ? "ok" : "criteria-failed"},
                {"files", files}};
  std::ofstream(r.dir / "manifest.json") << r.manifest.dump(2) << '\n';
  return r;
}

inline nlohmann::json error_report(const std::string& kind, const std::string& message) {
  return {{"status", "error"}, {"kind", kind}, {"message", message}};
}

}  // namespace wmfc::cli
