#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "wmfc/cli.hpp"

using namespace wmfc;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("wmfc_cli_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

json load(const std::string& file) {
  std::ifstream f(std::string(WMFC_CONFIG_DIR) + "/" + file);
  return json::parse(f);
}

cli::ScenarioConfig small(const std::string& experiment, const std::string& model, const std::string& out) {
  json j = {{"schema_version", 1}, {"model", {{"kind", model}}}, {"grid", {{"M", 10}}}, {"N", 200}, {"seed", 5}};
  if (experiment == "lq-solve") j["solver"] = {{"panel_size", 2}};
  if (model == "smooth-test") j["control"] = {{"kind", "constant"}, {"value", 0.2}};
  cli::ScenarioConfig c = cli::parse_config(j);
  c.experiment = experiment;
  c.out = out;
  return c;
}

std::set<std::string> files_of(const json& manifest) {
  std::set<std::string> s;
  for (const auto& f : manifest.at("files")) s.insert(f.at("file").get<std::string>());
  return s;
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const cli::ScenarioConfig c = cli::parse_config({{"schema_version", 1}});
  EXPECT_EQ(c.model, "lq");
  EXPECT_EQ(c.M, 100);
  EXPECT_EQ(c.N, 10000);
  EXPECT_EQ(c.seed, 20240611u);
}

TEST(Config, RejectsInvalidInput) {
  EXPECT_THROW(cli::parse_config(json::object()), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 2}}), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1}, {"particles", 10}}), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1}, {"N", 1}}), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1}, {"model", {{"kind", "heston"}}}}), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1}, {"seed", -3}}), ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1},
                                  {"grid", {{"T", 2.0}}},
                                  {"model", {{"kind", "lq"}, {"params", {{"T", 1.0}}}}}}),
               ValidationError);
  EXPECT_THROW(cli::parse_config({{"schema_version", 1},
                                  {"model", {{"kind", "smooth-test"}}},
                                  {"control", {{"value", 3.0}}}}),
               ValidationError);
}

TEST(Config, ZeroStepsNamesTheField) {
  try {
    cli::parse_config(load("invalid_m0.json"));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("grid M"), std::string::npos);
  }
}

TEST(Config, ShippedConfigsParse) {
  for (const char* f : {"lq_default.json", "smooth_default.json", "acceptance.json", "acceptance_coarse.json"})
    EXPECT_NO_THROW(cli::parse_config(load(f))) << f;
}

TEST(Config, EchoRoundTripsAndIgnoresThreads) {
  cli::ScenarioConfig c = cli::parse_config(load("smooth_default.json"));
  c.experiment = "gateaux";
  const json echo = cli::to_json(c);
  cli::ScenarioConfig back = cli::parse_config(echo);
  back.experiment = "gateaux";
  EXPECT_EQ(cli::to_json(back), echo);
  c.threads = 4;
  EXPECT_EQ(cli::to_json(c), echo);
}

TEST(Config, EmptyAcceptanceListRejected) {
  cli::ScenarioConfig c = cli::parse_config({{"schema_version", 1}, {"acceptance", {{"groups", json::array()}}}});
  c.experiment = "acceptance-suite";
  EXPECT_THROW(cli::validate_for(c), ValidationError);
}

TEST(Config, LqSolveNeedsLqModel) {
  cli::ScenarioConfig c = small("lq-solve", "smooth-test", "unused");
  EXPECT_THROW(cli::validate_for(c), ValidationError);
  c.experiment = "nonsense";
  EXPECT_THROW(cli::validate_for(c), ValidationError);
}

TEST(Digest, KnownSha256) {
  EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, LqSolveWritesExpectedArtifacts) {
  const auto out = scratch("lq");
  const cli::RunResult r = cli::run(small("lq-solve", "lq", out.string()));
  EXPECT_EQ(r.status, 0);
  const auto files = files_of(r.manifest);
  for (const char* f : {"riccati.csv", "moments.csv", "verification.json", "config.json"}) EXPECT_TRUE(files.count(f)) << f;
  EXPECT_TRUE(std::filesystem::exists(r.dir / "manifest.json"));
  EXPECT_EQ(r.dir.filename().string().rfind("lq-solve-", 0), 0u);
  EXPECT_EQ(r.dir.filename().string().size(), std::string("lq-solve-").size() + 16);
  std::ifstream ric(r.dir / "riccati.csv");
  std::string header;
  std::getline(ric, header);
  EXPECT_EQ(header.substr(0, 2), "t,");
  std::filesystem::remove_all(out);
}

TEST(Run, ManifestIsDeterministic) {
  const auto out = scratch("det");
  cli::ScenarioConfig c = small("lq-solve", "lq", out.string());
  const json m1 = cli::run(c).manifest;
  const json m2 = cli::run(c).manifest;
  c.threads = 3;
  const json m3 = cli::run(c).manifest;
  EXPECT_EQ(m1.dump(), m2.dump());
  EXPECT_EQ(m1.dump(), m3.dump());
  c.seed = 6;
  EXPECT_NE(cli::run(c).manifest.at("config_sha256"), m1.at("config_sha256"));
  std::filesystem::remove_all(out);
}

TEST(Run, EveryExperimentProducesItsFiles) {
  const auto out = scratch("all");
  const std::map<std::string, std::vector<std::string>> expect{
      {"simulate", {"summary.csv", "cost.json"}},
      {"picard", {"picard.csv", "summary.csv", "picard.json"}},
      {"adjoint", {"adjoint.csv", "adjoint.json"}},
      {"smp-residual", {"smp.csv", "smp.json"}},
      {"gateaux", {"gateaux.csv"}},
      {"duality", {"duality.json"}}};
  for (const auto& [exp, names] : expect) {
    const cli::RunResult r = cli::run(small(exp, "smooth-test", out.string()));
    EXPECT_EQ(r.status, 0) << exp;
    const auto files = files_of(r.manifest);
    for (const auto& n : names) EXPECT_TRUE(files.count(n)) << exp << ": " << n;
  }
  std::filesystem::remove_all(out);
}

TEST(Run, WritePathsAddsParticleDump) {
  const auto out = scratch("paths");
  cli::ScenarioConfig c = small("simulate", "smooth-test", out.string());
  c.write_paths = true;
  EXPECT_TRUE(files_of(cli::run(c).manifest).count("paths.csv"));
  std::filesystem::remove_all(out);
}
