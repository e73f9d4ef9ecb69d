#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "wmfc/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned threads = 1;
};

int report(const std::string& kind, const std::string& message, int code) {
  std::cout << wmfc::cli::error_report(kind, message).dump(2) << '\n';
  return code;
}

nlohmann::json load(const std::string& path) {
  if (path.empty()) return {{"schema_version", wmfc::cli::kSchemaVersion}};
  std::ifstream f(path);
  wmfc::require(static_cast<bool>(f), "config: cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw wmfc::ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted mean-field control: simulation, adjoints, Gateaux derivatives and the LQ solver"};
  app.require_subcommand(1);
  Flags flags;
  const std::map<std::string, std::string> blurb{
      {"simulate", "forward particle system and weighted moments"},
      {"picard", "fixed-point iteration of the mean-field coupling"},
      {"adjoint", "regression adjoints along a simulated path"},
      {"gateaux", "directional derivatives by three estimators"},
      {"duality", "duality identities between adjoints and variations"},
      {"lq-solve", "LQ synthesis, Riccati solution and verification"},
      {"smp-residual", "stochastic maximum principle residual"},
      {"acceptance-suite", "all acceptance criteria; exit 1 if any fails"},
  };
  for (const auto& name : wmfc::cli::experiments()) {
    const auto it = blurb.find(name);
    auto* sub = app.add_subcommand(name, it == blurb.end() ? "" : it->second);
    sub->add_option("--config", flags.config, "scenario JSON");
    sub->add_option("--seed", flags.seed, "overrides the config seed");
    sub->add_option("--out", flags.out, "root of the run directories");
    sub->add_option("--threads", flags.threads, "worker cap; results do not depend on it")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string experiment = app.get_subcommands().front()->get_name();

  wmfc::cli::ScenarioConfig cfg;
  try {
    cfg = wmfc::cli::parse_config(load(flags.config));
    wmfc::require(cfg.experiment.empty() || cfg.experiment == experiment,
                  "config: experiment '" + cfg.experiment + "' does not match subcommand '" + experiment + "'");
    cfg.experiment = experiment;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.out = *flags.out;
    cfg.threads = flags.threads;
    wmfc::cli::validate_for(cfg);
  } catch (const wmfc::ValidationError& e) {
    return report("validation", e.what(), 2);
  }

  try {
    const auto r = wmfc::cli::run(cfg);
    nlohmann::json j{{"status", r.status == 0 ? "ok" : "criteria-failed"}, {"dir", r.dir.string()},
                     {"manifest", r.manifest}};
    if (experiment == "acceptance-suite") {
      std::ifstream f(r.dir / "acceptance.json");
      j["acceptance"] = nlohmann::json::parse(f);
    }
    std::cout << j.dump(2) << '\n';
    return r.status;
  } catch (const wmfc::ValidationError& e) {
    return report("validation", e.what(), 2);
  } catch (const wmfc::NumericalError& e) {
    return report("numerical", e.what(), 3);
  } catch (const wmfc::ConvergenceError& e) {
    return report("convergence", e.what(), 3);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), 3);
  }
}
