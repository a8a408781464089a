#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rvcyl/harness/config.hpp"
#include "rvcyl/harness/experiments.hpp"

using namespace rvcyl;
using namespace rvcyl::harness;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    return e.what();
  }
  ADD_FAILURE() << "config was accepted";
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rvcyl_test_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(KeyValues, SectionsCommentsAndDottedKeys) {
  const auto kv = parse_key_values(
      "# header\n"
      "experiment = isometry   # trailing\n"
      "grid.N = 64\n"
      "[mc]\n"
      "  paths = 12\n"
      "\n"
      "[model]\n"
      "g.sigma = 0.25\n");
  EXPECT_EQ(kv.at("experiment"), "isometry");
  EXPECT_EQ(kv.at("grid.N"), "64");
  EXPECT_EQ(kv.at("mc.paths"), "12");
  EXPECT_EQ(kv.at("model.g.sigma"), "0.25");
  EXPECT_THROW(parse_key_values("no equals sign\n"), Error);
  EXPECT_THROW(parse_key_values("[broken\n"), Error);
}

TEST(Config, MinimalDocumentGetsDefaults) {
  const auto c = parse_config("experiment = rv-identities\n");
  EXPECT_EQ(c.experiment, "rv-identities");
  EXPECT_EQ(c.steps, 4096u);
  ASSERT_TRUE(c.ladder.length.has_value());
  EXPECT_EQ(*c.ladder.length, 4u);
  EXPECT_EQ(c.paths, 1000u);
  EXPECT_DOUBLE_EQ(c.tolerance("identity"), 1e-2);
  const auto ladder = c.ladder.build(c.time_grid());
  EXPECT_DOUBLE_EQ(ladder.smallest(), 0.0125);
}

TEST(Config, LadderBelowFloorNamesLadderField) {
  const auto msg = config_error("experiment = rv-identities\ngrid.N = 100\n");
  EXPECT_NE(msg.find("ladder.length"), std::string::npos) << msg;
  const auto msg2 = config_error("experiment = proposition1\ngrid.N = 50\nladder.eps0 = 0.1\n");
  EXPECT_NE(msg2.find("ladder.eps0"), std::string::npos) << msg2;
}

TEST(Config, UnknownRegistryEntryListsContents) {
  const auto msg = config_error("experiment = spde-adapted\n[model]\ng = cubic\n");
  EXPECT_NE(msg.find("model.g"), std::string::npos) << msg;
  EXPECT_NE(msg.find("linear"), std::string::npos) << msg;
}

TEST(Config, CollectsEveryViolation) {
  const auto msg = config_error(
      "experiment = proposition1\n"
      "truncation.J = 40\n"
      "truncation.M = 32\n"
      "mc.paths = 0\n"
      "grid.X = 1\n"
      "tolerance.bogus = 1\n"
      "integrand.names = constant, wiggly\n");
  for (const char* field : {"truncation.J", "mc.paths", "grid.X", "tolerance.bogus", "integrand.names"})
    EXPECT_NE(msg.find(field), std::string::npos) << field << "\n" << msg;
}

TEST(Config, UnknownOrMissingExperiment) {
  EXPECT_NE(config_error("experiment = nope\n").find("rv-identities"), std::string::npos);
  EXPECT_NE(config_error("grid.N = 8\n").find("experiment"), std::string::npos);
  EXPECT_NE(config_error("experiment = isometry\ngrid.N = many\n").find("grid.N"), std::string::npos);
}

TEST(Config, OverridesAndHash) {
  const std::string text = "experiment = isometry\nmc.paths = 10\n";
  const auto a = parse_config(text);
  const auto b = parse_config(text, {{"mc.paths", "20"}});
  const auto c = parse_config(text, {{"mc.workers", "4"}});
  EXPECT_EQ(b.paths, 20u);
  EXPECT_EQ(c.workers, 4u);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), c.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Config, OutputDirectoryPrecedence) {
  auto c = parse_config("experiment = isometry\n");
  ::setenv(output_dir_env, "/tmp/from-env", 1);
  EXPECT_EQ(resolve_output_dir(c), std::filesystem::path("/tmp/from-env/isometry"));
  c.output_dir = "cfg-dir";
  EXPECT_EQ(resolve_output_dir(c), std::filesystem::path("cfg-dir"));
  EXPECT_EQ(resolve_output_dir(c, "cli-dir"), std::filesystem::path("cli-dir"));
  ::unsetenv(output_dir_env);
  c.output_dir.clear();
  EXPECT_EQ(resolve_output_dir(c), std::filesystem::path("rvcyl-out/isometry"));
}

TEST(Run, KernelBoundsWritesReportAndIsByteStable) {
  const auto cfg = parse_config("experiment = kernel-bounds\ntruncation.M = 64\nkernel.count = 4\n");
  const auto d1 = scratch("kb1"), d2 = scratch("kb2");
  const auto r1 = run_experiment(cfg, d1);
  const auto r2 = run_experiment(cfg, d2);
  EXPECT_TRUE(r1.pass());
  EXPECT_EQ(r1.failed_rows(), 0u);
  const auto report = slurp(d1 / "report.csv");
  EXPECT_EQ(report.substr(0, report.find('\n')), "config_hash,seed,row_id,quantity,estimate,std_error,tolerance,pass");
  EXPECT_NE(report.find(cfg.hash_hex()), std::string::npos);
  EXPECT_EQ(report, slurp(d2 / "report.csv"));
  EXPECT_EQ(slurp(d1 / "kernel_bounds.csv"), slurp(d2 / "kernel_bounds.csv"));
}

TEST(Run, WorkerCountDoesNotChangeOutputs) {
  const std::string text = "experiment = proposition1\ngrid.N = 512\nmc.paths = 16\n";
  const auto d1 = scratch("w1"), d2 = scratch("w3");
  run_experiment(parse_config(text), d1);
  run_experiment(parse_config(text, {{"mc.workers", "3"}}), d2);
  EXPECT_EQ(slurp(d1 / "report.csv"), slurp(d2 / "report.csv"));
  EXPECT_EQ(slurp(d1 / "proposition1_differences.csv"), slurp(d2 / "proposition1_differences.csv"));
}

TEST(Run, ModuleErrorsBecomeFailedRows) {
  // Probe time below the kernel truncation floor makes the mild check throw.
  const auto cfg = parse_config(
      "experiment = spde-adapted\ngrid.N = 256\ngrid.P = 32\ntruncation.J = 8\ntruncation.M = 16\n"
      "mc.paths = 4\nspde.probes = 0.0001:0.5\n");
  const auto rep = run_experiment(cfg, scratch("err"));
  EXPECT_FALSE(rep.pass());
  ASSERT_NE(rep.find("mild-residual:error"), nullptr);
  EXPECT_FALSE(rep.find("mild-residual:error")->pass);
  EXPECT_FALSE(rep.errors.empty());
  ASSERT_NE(rep.find("deterministic-max-error"), nullptr);
  EXPECT_TRUE(rep.find("deterministic-max-error")->pass);
}

TEST(Run, OverallPassIsConjunction) {
  ExperimentReport rep;
  EXPECT_FALSE(rep.pass());
  rep.rows.push_back({"a", 1.0, 0.0, 2.0, true});
  EXPECT_TRUE(rep.pass());
  rep.rows.push_back({"b", 3.0, 0.0, 2.0, false});
  EXPECT_FALSE(rep.pass());
  EXPECT_EQ(rep.failed_rows(), 1u);
}
