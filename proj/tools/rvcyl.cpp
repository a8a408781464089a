// Command-line driver for the experiment harness.
//
//   rvcyl list-experiments
//   rvcyl validate <config>
//   rvcyl run <config> [--seed S] [--mc N] [--workers W] [--out-dir DIR]
//
// Exit status: 0 when every report row passes, the number of failed rows
// (capped at 63) otherwise, 64 for configuration or usage errors.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rvcyl/harness/config.hpp"
#include "rvcyl/harness/experiments.hpp"

namespace {

constexpr int exit_config_error = 64;

rvcyl::harness::KeyValues overrides(const std::optional<std::uint64_t>& seed, const std::optional<std::size_t>& mc,
                                    const std::optional<std::size_t>& workers) {
  rvcyl::harness::KeyValues kv;
  if (seed) kv["mc.seed"] = std::to_string(*seed);
  if (mc) kv["mc.paths"] = std::to_string(*mc);
  if (workers) kv["mc.workers"] = std::to_string(*workers);
  return kv;
}

void print_report(const rvcyl::harness::ExperimentReport& rep) {
  std::printf("experiment %s  config %s  seed %llu\n", rep.experiment.c_str(), rep.config_hash.c_str(),
              static_cast<unsigned long long>(rep.seed));
  for (const auto& r : rep.rows)
    std::printf("  %-4s %-42s %-24s tol %s\n", r.pass ? "ok" : "FAIL", r.quantity.c_str(),
                rvcyl::io::format_number(r.estimate).c_str(), rvcyl::io::format_number(r.tolerance).c_str());
  for (const auto& e : rep.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  std::printf("output %s\n", rep.output_dir.string().c_str());
  std::printf("%s: %zu/%zu rows passed in %.2f s\n", rep.pass() ? "PASS" : "FAIL", rep.rows.size() - rep.failed_rows(),
              rep.rows.size(), rep.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized stochastic integrals and the stochastic heat equation"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-experiments", "Print the experiment names");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file and print the resolved keys");
  validate->add_option("config", validate_path, "Config file")->required();

  std::string run_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mc, workers;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_path, "Config file")->required();
  run->add_option("--seed", seed, "Master seed (overrides mc.seed)");
  run->add_option("--mc", mc, "Monte Carlo paths (overrides mc.paths)");
  run->add_option("--workers", workers, "Worker threads (overrides mc.workers)");
  run->add_option("--out-dir", out_dir, "Output directory (overrides output.dir and $RVCYL_OUT_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config_error;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : rvcyl::harness::experiment_names()) std::cout << name << '\n';
      return 0;
    }
    if (validate->parsed()) {
      const auto cfg = rvcyl::harness::load_config(validate_path);
      std::cout << "# config_hash " << cfg.hash_hex() << '\n' << cfg.canonical();
      return 0;
    }
    const auto cfg = rvcyl::harness::load_config(run_path, overrides(seed, mc, workers));
    const auto dir = rvcyl::harness::resolve_output_dir(cfg, out_dir);
    const auto rep = rvcyl::harness::run_experiment(cfg, dir);
    print_report(rep);
    return static_cast<int>(std::min<std::size_t>(rep.failed_rows(), 63));
  } catch (const rvcyl::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return e.code() == rvcyl::Errc::config ? exit_config_error : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
