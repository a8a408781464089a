#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rvcyl/cylindrical.hpp"
#include "rvcyl/harness/config.hpp"
#include "rvcyl/harness/report.hpp"
#include "rvcyl/heat_kernel.hpp"
#include "rvcyl/io.hpp"
#include "rvcyl/parallel.hpp"
#include "rvcyl/regularization.hpp"
#include "rvcyl/spde.hpp"
#include "rvcyl/stats.hpp"
#include "rvcyl/stochastic_paths.hpp"

namespace rvcyl::harness {

inline constexpr const char* output_dir_env = "RVCYL_OUT_DIR";

/// --out-dir, then output.dir from the config, then $RVCYL_OUT_DIR/<experiment>,
/// then ./rvcyl-out/<experiment>.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::string& cli_override = {}) {
  if (!cli_override.empty()) return cli_override;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(output_dir_env); env && *env) return std::filesystem::path(env) / cfg.experiment;
  return std::filesystem::path("rvcyl-out") / cfg.experiment;
}

namespace detail {

class Recorder {
 public:
  Recorder(ExperimentReport& rep, std::filesystem::path dir) : rep_(rep), dir_(std::move(dir)) {}

  void add(std::string quantity, double estimate, double std_error, double tolerance, bool pass) {
    rep_.rows.push_back({std::move(quantity), estimate, std_error, tolerance, pass && std::isfinite(estimate)});
  }

  /// Recorded value without a threshold; passes when finite.
  void note(std::string quantity, double estimate, double std_error = 0.0) {
    add(std::move(quantity), estimate, std_error, no_threshold, true);
  }

  /// Runs one block of checks; a module error becomes a failed row named after the block.
  void guard(const std::string& block, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep_.errors.push_back(block + ": " + e.what());
      add(block + ":error", std::nan(""), std::nan(""), no_threshold, false);
    }
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    rep_.artifacts.push_back(name);
    return io::open_output(dir_ / name, binary);
  }

 private:
  ExperimentReport& rep_;
  std::filesystem::path dir_;
};

inline IntegrandRule integrand_rule(const ExperimentConfig& cfg, const std::string& name) {
  const std::size_t mode = cfg.integrand_mode;
  if (name == "constant") {
    std::vector<double> a(mode, 0.0);
    a[mode - 1] = 1.0;  // unit V_Q norm
    return integrands::constant(std::move(a));
  }
  if (name == "indicator") return integrands::indicator(mode, cfg.integrand_cutoff * cfg.horizon);
  if (name == "noise-linear") return integrands::noise_linear(mode);
  throw Error(Errc::config, "unknown integrand '" + name + "'");
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / double(count - 1));
  return out;
}

// ---------------------------------------------------------------------------

inline void run_rv_identities(const ExperimentConfig& cfg, Recorder& rec) {
  const TimeGrid grid = cfg.time_grid();
  const EpsilonLadder ladder = cfg.ladder.build(grid);
  const double eps = ladder.smallest();
  const double horizon = grid.horizon();
  // Companion resolution for the halving check: eps/2 on a grid twice as fine.
  const TimeGrid fine(horizon, 2 * grid.steps());
  const std::size_t n = cfg.paths;

  std::vector<double> terminal(n), fw(n), bw(n), sy(n), cv(n), oracle(n), fw_fine(n), oracle_fine(n), indep(n);
  std::vector<int> settled(n);
  RegularizedIntegralResult first;
  rec.guard("rv-ensemble", [&] {
    parallel_for(n, cfg.workers, [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(cfg.seed, {stream::replica, r});
      const auto w = simulate_brownian(grid, 1.0, seed);
      const auto v = simulate_brownian(grid, 1.0, derive_seed(seed, {stream::companion}));
      auto lim = estimate_ucp_limit(IntegralKind::forward, w, w, ladder);
      terminal[r] = w.terminal();
      fw[r] = lim.terminal_limit();
      bw[r] = eps_backward(w, w, eps, horizon);
      sy[r] = eps_symmetric(w, w, eps, horizon);
      cv[r] = eps_covariation(w, w, eps, horizon);
      oracle[r] = 0.5 * (w.terminal() * w.terminal() - horizon);
      indep[r] = eps_covariation(w, v, eps, horizon);
      settled[r] = lim.settled() ? 1 : 0;
      if (r == 0) first = std::move(lim);

      const auto wf = simulate_brownian(fine, 1.0, seed);
      fw_fine[r] = eps_forward(wf, wf, 0.5 * eps, horizon);
      oracle_fine[r] = 0.5 * (wf.terminal() * wf.terminal() - horizon);
    });

    std::vector<double> id_sym(n), id_cov(n), err(n), err_fine(n);
    for (std::size_t r = 0; r < n; ++r) {
      id_sym[r] = sy[r] - (fw[r] + 0.5 * cv[r]);
      id_cov[r] = cv[r] - (bw[r] - fw[r]);
      err[r] = fw[r] - oracle[r];
      err_fine[r] = fw_fine[r] - oracle_fine[r];
    }
    const auto s_sym = summarize(id_sym), s_cov = summarize(id_cov);
    const auto s_err = summarize(err), s_fine = summarize(err_fine);
    const double tol_id = cfg.tolerance("identity");
    rec.add("identity-symmetric-rms", s_sym.rms, s_sym.std_error, tol_id, s_sym.rms < tol_id);
    rec.add("identity-covariation-rms", s_cov.rms, s_cov.std_error, tol_id, s_cov.rms < tol_id);
    const double tol_ito = cfg.tolerance("ito");
    rec.add("ito-mean-abs-error", s_err.mean_abs, s_err.std_error, tol_ito, s_err.mean_abs < tol_ito);
    rec.add("ito-mean-error", s_err.mean, s_err.std_error, 3.0 * s_err.std_error,
            std::abs(s_err.mean) <= 3.0 * s_err.std_error);
    const double ratio = s_fine.mean_abs / s_err.mean_abs;
    rec.add("ito-error-halving-ratio", ratio, 0.0, 1.0, ratio < 1.0);

    const auto s_qv = summarize(cv);
    const double tol_qv = cfg.tolerance("quadratic-variation");
    rec.add("quadratic-variation-mean", s_qv.mean, s_qv.std_error, tol_qv * horizon,
            std::abs(s_qv.mean - horizon) <= tol_qv * horizon);
    const auto s_ind = summarize(indep);
    rec.add("independent-covariation-mean", s_ind.mean, s_ind.std_error, 3.0 * s_ind.std_error,
            std::abs(s_ind.mean) <= 3.0 * s_ind.std_error);
    double frac = 0.0;
    for (int c : settled) frac += c;
    frac /= static_cast<double>(n);
    const double tol_frac = cfg.tolerance("ucp-fraction");
    rec.add("forward-ucp-converged-fraction", frac, 0.0, tol_frac, frac >= tol_frac);

    auto out = rec.open("rv_paths.csv");
    io::CsvWriter csv(out, {"replica", "W_T", "forward", "backward", "symmetric", "covariation", "ito_oracle",
                            "independent_covariation"});
    for (std::size_t r = 0; r < n; ++r)
      csv.row({double(r), terminal[r], fw[r], bw[r], sy[r], cv[r], oracle[r], indep[r]});
    auto curves = rec.open("rv_forward_curves.csv");
    io::write_regularized_csv(curves, grid, first);
  });
}

inline void run_proposition1(const ExperimentConfig& cfg, Recorder& rec) {
  const TimeGrid grid = cfg.time_grid();
  const EpsilonLadder ladder = cfg.ladder.build(grid);
  const auto cov = CovarianceSpec::standard(cfg.noise_modes);
  const double tol = cfg.tolerance("rms");
  std::vector<std::vector<double>> diffs;
  for (const auto& name : cfg.integrands) {
    rec.guard("prop1-" + name, [&] {
      const auto rep =
          check_proposition1(integrand_rule(cfg, name), grid, cov, ladder, cfg.paths, cfg.seed, tol, {cfg.workers});
      rec.add("prop1-" + name + "-rms", rep.rms, 0.0, tol, rep.rms < tol);
      rec.add("prop1-" + name + "-mean", rep.mean, rep.std_error, 3.0 * rep.std_error,
              std::abs(rep.mean) <= 3.0 * rep.std_error);
      rec.note("prop1-" + name + "-mode-converged-fraction", rep.mode_converged_fraction);
      diffs.push_back(rep.differences);
    });
  }
  if (diffs.size() != cfg.integrands.size()) return;
  std::vector<std::string> header{"replica"};
  for (const auto& name : cfg.integrands) header.push_back(name);
  auto out = rec.open("proposition1_differences.csv");
  io::CsvWriter csv(out, header);
  std::vector<double> row(header.size());
  for (std::size_t r = 0; r < cfg.paths; ++r) {
    row[0] = double(r);
    for (std::size_t i = 0; i < diffs.size(); ++i) row[i + 1] = diffs[i][r];
    csv.row(row);
  }
}

inline void run_isometry(const ExperimentConfig& cfg, Recorder& rec) {
  const TimeGrid grid = cfg.time_grid();
  const auto cov = CovarianceSpec::standard(cfg.noise_modes);
  const double tol = cfg.tolerance("relative");
  auto out = rec.open("isometry.csv");
  io::CsvWriter csv(out, {"integrand", "lhs", "lhs_std_error", "rhs", "relative_error"});
  for (const auto& name : cfg.integrands) {
    rec.guard("isometry-" + name, [&] {
      const auto rep = isometry_diagnostic(integrand_rule(cfg, name), grid, cov, cfg.paths, cfg.seed, tol, {cfg.workers});
      const double se = rep.rhs > 0.0 ? rep.lhs_std_error / rep.rhs : rep.lhs_std_error;
      rec.add("isometry-" + name + "-relative-error", rep.relative_error, se, tol, rep.pass);
      csv.row_strings({name, io::format_number(rep.lhs), io::format_number(rep.lhs_std_error),
                       io::format_number(rep.rhs), io::format_number(rep.relative_error)});
    });
  }
}

inline void run_kernel_bounds(const ExperimentConfig& cfg, Recorder& rec) {
  const HeatKernel kernel(cfg.kernel_modes);
  const auto times = log_spaced(cfg.kernel_t_min, cfg.kernel_t_max, cfg.kernel_count);
  const SpaceGrid working = cfg.space_grid();
  const double tol_slope = cfg.tolerance("slope");
  auto out = rec.open("kernel_bounds.csv");
  io::CsvWriter csv(out, {"p", "t", "max_integral", "scaled"});
  for (double p : {1.0, 2.0, 3.0}) {
    const std::string tag = "p" + std::to_string(static_cast<int>(p));
    rec.guard("lp-" + tag, [&] {
      const auto rep = check_lp_bound(kernel, p, times, working);
      if (p == 1.0) {
        const double tol = cfg.tolerance("mass");
        rec.add("lp-mass-p1", rep.peak, 0.0, tol, rep.peak <= tol * (1.0 + 1e-12));
      } else {
        rec.add("lp-slope-" + tag, rep.fitted_slope, 0.0, tol_slope,
                std::abs(rep.fitted_slope - rep.expected_slope) <= tol_slope);
      }
      rec.note("lp-constant-" + tag, rep.constant);
      for (std::size_t i = 0; i < times.size(); ++i)
        csv.row({p, times[i], rep.max_integral[i], rep.max_integral[i] / std::pow(times[i], rep.expected_slope)});
    });
  }
  rec.guard("semigroup", [&] {
    const double defect = semigroup_defect(HeatKernel(cfg.semigroup_modes), cfg.semigroup_t, cfg.semigroup_t);
    const double tol = cfg.tolerance("semigroup");
    rec.add("semigroup-defect", defect, 0.0, tol, defect < tol);
  });
}

struct ResidualRun {
  std::vector<MildReport> reports;
  double max_boundary = 0.0;
  std::vector<FieldPath> first;  // replica 0 only
};

inline ResidualRun mild_residuals(const ExperimentConfig& cfg, const SpdeProblem& problem, std::size_t paths) {
  const EpsilonLadder ladder = cfg.ladder.build(problem.time);
  ResidualRun run;
  run.reports.resize(paths);
  std::vector<double> boundary(paths);
  run.first.assign(1, FieldPath{problem.time, problem.space, {}, 0, {}, {}});
  parallel_for(paths, cfg.workers, [&](std::size_t r) {
    const auto noise = replica_noise(problem.time, problem.noise_covariance(), cfg.seed, r);
    auto u = solve_substitution(problem, noise);
    boundary[r] = u.boundary_sup();
    run.reports[r] = verify_mild(problem, u, noise, ladder, cfg.probes);
    if (r == 0) run.first[0] = std::move(u);
  });
  for (double b : boundary) run.max_boundary = std::max(run.max_boundary, b);
  return run;
}

inline SampleSummary residual_summary(const ResidualRun& run) {
  std::vector<double> res;
  for (const auto& rep : run.reports)
    for (const auto& p : rep.probes) res.push_back(p.residual);
  return summarize(res);
}

inline double max_ito_residual(const ResidualRun& run) {
  double m = 0.0;
  for (const auto& rep : run.reports) m = std::max(m, rep.max_ito_residual);
  return m;
}

inline void write_residuals(std::ostream& out, const ResidualRun& run) {
  io::CsvWriter csv(out, {"replica", "t", "x", "value", "initial_term", "forward_term", "ito_term", "residual"});
  for (std::size_t r = 0; r < run.reports.size(); ++r)
    for (const auto& p : run.reports[r].probes)
      csv.row({double(r), p.t, p.x, p.value, p.initial_term, p.forward_term, p.ito_term, p.residual});
}

inline void run_spde_adapted(const ExperimentConfig& cfg, Recorder& rec) {
  const SpdeProblem base = cfg.problem();

  rec.guard("deterministic", [&] {
    SpdeProblem p = base;
    p.g = registry::noise_coefficient("zero");
    p.f = registry::initial_profile("sin-profile");
    const auto noise = replica_noise(p.time, p.noise_covariance(), cfg.seed, 0);
    const auto u = solve_auxiliary(p, cfg.spde_z, noise);
    double worst = 0.0;
    for (std::size_t k = 0; k < p.time.size(); ++k)
      for (std::size_t i = 0; i < p.space.size(); ++i) {
        const double exact = cfg.spde_z * std::exp(-dirichlet_eigenvalue(1) * p.time.node(k)) *
                             std::sin(std::numbers::pi * p.space.node(i));
        worst = std::max(worst, std::abs(u.at(k, i) - exact));
      }
    const double tol = cfg.tolerance("deterministic");
    rec.add("deterministic-max-error", worst, 0.0, tol, worst < tol);
  });

  rec.guard("additive-variance", [&] {
    SpdeProblem p = base;
    p.g = registry::noise_coefficient("constant");
    p.f = registry::initial_profile("zero");
    const std::size_t i = p.space.nearest_index(0.5);
    const double x = p.space.node(i);
    std::vector<double> end(cfg.paths);
    parallel_for(cfg.paths, cfg.workers, [&](std::size_t r) {
      const auto noise = replica_noise(p.time, p.noise_covariance(), cfg.seed, r);
      end[r] = solve_auxiliary(p, 0.0, noise).at(p.time.steps(), i);
    });
    const auto s = summarize(end);
    const double oracle = additive_noise_variance(p.noise_modes, p.kernel_modes, p.time.horizon(), x);
    const double rel = std::abs(s.variance - oracle) / oracle;
    const double se = s.variance * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(cfg.paths - 1, 1))) / oracle;
    const double tol = cfg.tolerance("variance");
    rec.add("additive-variance-relative-error", rel, se, tol, rel <= tol);
    rec.note("additive-variance-estimate", s.variance);
    rec.note("additive-variance-oracle", oracle);
    auto out = rec.open("spde_adapted_variance.csv");
    io::CsvWriter csv(out, {"replica", "u_T_x"});
    for (std::size_t r = 0; r < end.size(); ++r) csv.row({double(r), end[r]});
  });

  rec.guard("mild-residual", [&] {
    const auto run = mild_residuals(cfg, base, std::min(cfg.residual_paths, cfg.paths));
    const auto s = residual_summary(run);
    const double tol = cfg.tolerance("residual");
    rec.add("mild-residual-rms", s.rms, s.std_error, tol, s.rms < tol);
    const double ito = max_ito_residual(run);
    rec.add("mild-ito-residual-max", ito, 0.0, 1e-10, ito < 1e-10);
    rec.add("dirichlet-boundary-sup", run.max_boundary, 0.0, 0.0, run.max_boundary == 0.0);
    auto out = rec.open("spde_adapted_residuals.csv");
    write_residuals(out, run);
    auto bin = rec.open("field.bin", true);
    io::write_field_binary(bin, run.first.front());
  });
}

inline void run_spde_anticipating(const ExperimentConfig& cfg, Recorder& rec) {
  const SpdeProblem problem = cfg.problem();
  SpdeProblem baseline = problem;
  baseline.F = registry::initial_randomness("constant", {{"z0", cfg.spde_z}});
  const std::size_t paths = cfg.paths;

  rec.guard("residual-comparison", [&] {
    const auto anti = mild_residuals(cfg, problem, paths);
    const auto base = mild_residuals(cfg, baseline, paths);
    const auto sa = residual_summary(anti), sb = residual_summary(base);
    rec.note("anticipating-residual-rms", sa.rms, sa.std_error);
    rec.note("adapted-baseline-residual-rms", sb.rms, sb.std_error);
    const double ratio = sa.rms / sb.rms;
    const double tol = cfg.tolerance("ratio");
    rec.add("residual-ratio", ratio, 0.0, tol, ratio <= tol);
    rec.add("dirichlet-boundary-sup", anti.max_boundary, 0.0, 0.0, anti.max_boundary == 0.0);
    const double ito = std::max(max_ito_residual(anti), max_ito_residual(base));
    const double tol_ito = cfg.tolerance("ito-residual");
    rec.add("ito-residual-max", ito, 0.0, tol_ito, ito < tol_ito);
    auto out = rec.open("spde_anticipating_residuals.csv");
    write_residuals(out, anti);
    auto out_base = rec.open("spde_baseline_residuals.csv");
    write_residuals(out_base, base);
    auto bin = rec.open("field.bin", true);
    io::write_field_binary(bin, anti.first.front());
  });

  rec.guard("constant-substitution", [&] {
    // Constant F must reproduce the auxiliary solve bit for bit.
    double mismatches = 0.0;
    for (std::size_t r = 0; r < std::min<std::size_t>(paths, 4); ++r) {
      const auto noise = replica_noise(baseline.time, baseline.noise_covariance(), cfg.seed, r);
      const auto u = solve_substitution(baseline, noise);
      const auto v = solve_auxiliary(baseline, cfg.spde_z, noise);
      for (std::size_t c = 0; c < u.values.size(); ++c) mismatches += u.values[c] == v.values[c] ? 0.0 : 1.0;
    }
    rec.add("constant-substitution-mismatches", mismatches, 0.0, 0.0, mismatches == 0.0);
  });
}

inline void run_lipschitz(const ExperimentConfig& cfg, Recorder& rec) {
  const SpdeProblem problem = cfg.problem();
  const ZGrid zgrid{{cfg.lipschitz_z}};
  rec.guard("lipschitz", [&] {
    const auto rep = lipschitz_diagnostic(problem, zgrid, cfg.paths, cfg.seed, {cfg.workers});
    const double tol = cfg.tolerance("slope");
    rec.add("lipschitz-separation-slope", rep.separation_slope, 0.0, tol, rep.pass);
    rec.note("lipschitz-empirical-constant", rep.empirical_constant);
    rec.note("lipschitz-separation-decades", std::log10(rep.separations.back() / rep.separations.front()));
    auto out = rec.open("lipschitz_pairs.csv");
    io::CsvWriter csv(out, {"a", "b", "z_a", "z_b", "separation", "ratio"});
    for (const auto& p : rep.pairs)
      csv.row({double(p.a), double(p.b), rep.points[p.a][0], rep.points[p.b][0], p.separation, p.ratio});
  });
  rec.guard("lipschitz-deterministic", [&] {
    SpdeProblem p = problem;
    p.g = registry::noise_coefficient("zero");
    const auto rep = lipschitz_diagnostic(p, zgrid, 1, cfg.seed, {cfg.workers});
    const double tol = cfg.tolerance("deterministic");
    rec.add("deterministic-ratio", rep.empirical_constant, 0.0, tol, std::abs(rep.empirical_constant - 1.0) <= tol);
  });
}

}  // namespace detail

/// Runs the configured experiment, writes report.csv and its artifacts into
/// `dir`, and returns the report. Module errors become failed rows.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.experiment = cfg.experiment;
  rep.config_hash = cfg.hash_hex();
  rep.seed = cfg.seed;
  rep.output_dir = dir;
  std::filesystem::create_directories(dir);
  detail::Recorder rec(rep, dir);

  if (cfg.experiment == "rv-identities") detail::run_rv_identities(cfg, rec);
  else if (cfg.experiment == "proposition1") detail::run_proposition1(cfg, rec);
  else if (cfg.experiment == "isometry") detail::run_isometry(cfg, rec);
  else if (cfg.experiment == "kernel-bounds") detail::run_kernel_bounds(cfg, rec);
  else if (cfg.experiment == "spde-adapted") detail::run_spde_adapted(cfg, rec);
  else if (cfg.experiment == "spde-anticipating") detail::run_spde_anticipating(cfg, rec);
  else if (cfg.experiment == "lipschitz") detail::run_lipschitz(cfg, rec);
  else throw Error(Errc::config, "unknown experiment '" + cfg.experiment + "'");

  {
    auto out = io::open_output(dir / "config.resolved");
    out << "# config_hash " << rep.config_hash << '\n' << cfg.canonical();
  }
  {
    auto out = io::open_output(dir / "report.csv");
    write_report_csv(out, rep);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace rvcyl::harness
