#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/parallel.hpp"
#include "rvcyl/regularization.hpp"
#include "rvcyl/rng.hpp"
#include "rvcyl/sine_basis.hpp"
#include "rvcyl/stats.hpp"
#include "rvcyl/stochastic_paths.hpp"

namespace rvcyl {

/// V_Q-valued integrand stored through its coordinates c_j(t_k) = <g_{t_k}, v_j>_{V_Q}
/// in a V_Q-orthonormal basis. No adaptedness is implied.
struct VQProcess {
  TimeGrid grid;
  CovarianceSpec covariance;
  std::vector<std::vector<double>> coefficients;

  [[nodiscard]] std::size_t modes() const noexcept { return coefficients.size(); }
  [[nodiscard]] std::span<const double> coefficient(std::size_t j) const { return coefficients.at(j - 1); }

  void validate() const {
    detail::require(covariance.modes() == coefficients.size(), Errc::dimension,
                    "integrand has " + std::to_string(coefficients.size()) + " coefficient paths but " +
                        std::to_string(covariance.modes()) + " covariance eigenvalues");
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
      detail::require(coefficients[j].size() == grid.size(), Errc::dimension,
                      "coefficient path " + std::to_string(j + 1) + " does not match the time grid");
      for (double v : coefficients[j])
        detail::require(std::isfinite(v), Errc::invalid_parameter,
                        "coefficient path " + std::to_string(j + 1) + " is not finite");
    }
  }

  static VQProcess zero(const TimeGrid& grid, const CovarianceSpec& cov) {
    return {grid, cov, std::vector<std::vector<double>>(cov.modes(), std::vector<double>(grid.size(), 0.0))};
  }

  /// c_j(t_k) = fn(j, k) with j 1-based.
  template <class Fn>
  static VQProcess from_coefficients(const TimeGrid& grid, const CovarianceSpec& cov, Fn&& fn) {
    VQProcess g = zero(grid, cov);
    for (std::size_t j = 1; j <= cov.modes(); ++j)
      for (std::size_t k = 0; k < grid.size(); ++k) g.coefficients[j - 1][k] = fn(j, k);
    return g;
  }
};

/// <field, v_j>_{V_Q} for the V_Q-orthonormal v_j = e_j / sqrt(q_j), where the
/// L^2 product with e_j is the trapezoidal rule on the table's space grid.
inline double vq_coefficient(const CovarianceSpec& cov, std::size_t j, const SineTable& table,
                             std::span<const double> field) {
  const double q = cov.eigenvalues.at(j - 1);
  if (q == 0.0) return 0.0;
  const auto e = table.mode(j);
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < e.size(); ++i) acc += field[i] * e[i];
  return std::sqrt(q) * table.grid().dx() * acc;
}

/// Builds a VQProcess from a space-time field g(t, x) sampled on `space`.
template <class Fn>
VQProcess vq_process_from_field(const TimeGrid& grid, const SpaceGrid& space, const CovarianceSpec& cov, Fn&& field_fn) {
  SineTable table(space, cov.modes());
  VQProcess g = VQProcess::zero(grid, cov);
  std::vector<double> field(space.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t i = 0; i < space.size(); ++i) field[i] = field_fn(grid.node(k), space.node(i));
    for (std::size_t j = 1; j <= cov.modes(); ++j) g.coefficients[j - 1][k] = vq_coefficient(cov, j, table, field);
  }
  return g;
}

struct SeriesPolicy {
  /// Bound on the partial-sum oscillation over the last `window` modes.
  double tolerance = 1e-2;
  std::size_t window = 4;
};

struct SeriesIntegralResult {
  std::vector<double> terms;         // c_j
  std::vector<double> partial_sums;  // S_m = sum_{j<=m} c_j
  std::optional<double> tail_estimate;
  double oscillation = 0.0;
  double tolerance = 0.0;
  bool converged = false;
  std::vector<RegularizedIntegralResult> mode_limits;  // filled by the forward integral only

  [[nodiscard]] double value() const noexcept { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
};

namespace detail {

inline void require_compatible(const VQProcess& g, const CylindricalWienerPath& w) {
  g.validate();
  require(g.grid == w.grid, Errc::dimension, "integrand and noise live on different time grids");
  require(g.modes() >= w.modes(), Errc::dimension,
          "integrand has " + std::to_string(g.modes()) + " modes, noise has " + std::to_string(w.modes()));
  for (std::size_t j = 0; j < w.modes(); ++j)
    require(g.covariance.eigenvalues[j] == w.covariance.eigenvalues[j], Errc::dimension,
            "integrand and noise disagree on covariance eigenvalue " + std::to_string(j + 1));
}

inline std::size_t resolve_upper(const TimeGrid& grid, std::optional<std::size_t> upper) {
  const std::size_t u = upper.value_or(grid.steps());
  require(u <= grid.steps(), Errc::invalid_parameter, "upper time index lies beyond the grid");
  return u;
}

inline void finish_series(SeriesIntegralResult& r, const VQProcess& g, std::size_t noise_modes, std::size_t upper,
                          const SeriesPolicy& policy) {
  double acc = 0.0;
  r.partial_sums.reserve(r.terms.size());
  for (double c : r.terms) {
    acc += c;
    r.partial_sums.push_back(acc);
  }
  const std::size_t window = std::min(policy.window, r.partial_sums.size());
  const auto first = r.partial_sums.end() - static_cast<std::ptrdiff_t>(window);
  const auto [lo, hi] = std::minmax_element(first, r.partial_sums.end());
  r.oscillation = window ? *hi - *lo : 0.0;
  r.tolerance = policy.tolerance;
  r.converged = r.oscillation <= policy.tolerance;

  // Isometry proxy for the discarded modes J+1..2J, when the integrand has them.
  if (g.modes() > noise_modes) {
    const std::size_t stop = std::min(g.modes(), 2 * noise_modes);
    const double dt = g.grid.dt();
    double tail = 0.0;
    for (std::size_t j = noise_modes + 1; j <= stop; ++j) {
      const auto c = g.coefficient(j);
      for (std::size_t k = 0; k < upper; ++k) tail += c[k] * c[k] * dt;
    }
    r.tail_estimate = tail;
  }
}

}  // namespace detail

/// Truncated series sum_j int_0^t <g, v_j>_{V_Q} dB(v_j), each term a
/// left-endpoint (Ito) Riemann sum on the noise grid.
inline SeriesIntegralResult ito_series_integral(const VQProcess& g, const CylindricalWienerPath& w,
                                                std::optional<std::size_t> upper = std::nullopt,
                                                const SeriesPolicy& policy = {}) {
  detail::require_compatible(g, w);
  const std::size_t last = detail::resolve_upper(w.grid, upper);
  SeriesIntegralResult r;
  r.terms.resize(w.modes());
  for (std::size_t j = 1; j <= w.modes(); ++j) {
    const auto c = g.coefficient(j);
    const auto& b = w.mode(j).values;
    double s = 0.0;
    for (std::size_t k = 0; k < last; ++k) s += c[k] * (b[k + 1] - b[k]);
    r.terms[j - 1] = s;
  }
  detail::finish_series(r, g, w.modes(), last, policy);
  return r;
}

/// Russo-Vallois cylindrical forward integral: each c_j is the forward
/// regularized integral of <g, v_j>_{V_Q} against B(v_j), read at the
/// smallest admissible eps, then summed in mode order. Works pathwise, so the
/// integrand may anticipate the noise.
inline SeriesIntegralResult rv_cylindrical_forward(const VQProcess& g, const CylindricalWienerPath& w,
                                                   const EpsilonLadder& ladder,
                                                   std::optional<std::size_t> upper = std::nullopt,
                                                   const ConvergencePolicy& mode_policy = {},
                                                   const SeriesPolicy& policy = {}) {
  detail::require_compatible(g, w);
  ladder.require_admissible(w.grid);
  const std::size_t last = detail::resolve_upper(w.grid, upper);
  SeriesIntegralResult r;
  r.terms.resize(w.modes());
  r.mode_limits.reserve(w.modes());
  for (std::size_t j = 1; j <= w.modes(); ++j) {
    auto lim = estimate_ucp_limit(IntegralKind::forward, w.grid, g.coefficient(j), w.mode(j).view(), ladder,
                                  mode_policy, last);
    // A divergent-looking mode below the series tolerance cannot move the sum.
    if (lim.diverging) {
      double size = 0.0;
      for (double v : lim.limit) size = std::max(size, std::abs(v));
      if (size > policy.tolerance) throw ModeDivergence(j);
    }
    r.terms[j - 1] = lim.limit[last];
    r.mode_limits.push_back(std::move(lim));
  }
  detail::finish_series(r, g, w.modes(), last, policy);
  return r;
}

/// Integrand as a function of the noise realization it will be integrated
/// against (adapted or not).
using IntegrandRule = std::function<VQProcess(const CylindricalWienerPath&)>;

struct McOptions {
  std::size_t workers = 1;
};

inline CylindricalWienerPath replica_noise(const TimeGrid& grid, const CovarianceSpec& cov, std::uint64_t seed,
                                           std::size_t replica) {
  return simulate_cylindrical(grid, cov, derive_seed(seed, {stream::replica, replica}));
}

struct Proposition1Report {
  std::vector<double> differences;  // Ito series minus forward integral, per path
  double mean = 0.0;
  double std_error = 0.0;
  double rms = 0.0;
  double tolerance = 0.0;
  double mode_converged_fraction = 0.0;  // ucp detector over active modes
  bool pass = false;
};

/// Monte Carlo comparison of the Ito series integral with the Russo-Vallois
/// cylindrical forward integral for an adapted integrand.
inline Proposition1Report check_proposition1(const IntegrandRule& rule, const TimeGrid& grid, const CovarianceSpec& cov,
                                             const EpsilonLadder& ladder, std::size_t n_mc, std::uint64_t seed,
                                             double tolerance = 5e-2, const McOptions& mc = {}) {
  detail::require(n_mc >= 1, Errc::invalid_parameter, "Monte Carlo count must be at least 1");
  ladder.require_admissible(grid);
  std::vector<double> diff(n_mc);
  std::vector<std::size_t> active(n_mc, 0), settled(n_mc, 0);
  parallel_for(n_mc, mc.workers, [&](std::size_t r) {
    const auto w = replica_noise(grid, cov, seed, r);
    const VQProcess g = rule(w);
    const auto ito = ito_series_integral(g, w);
    const auto rv = rv_cylindrical_forward(g, w, ladder);
    diff[r] = ito.value() - rv.value();
    for (const auto& m : rv.mode_limits) {
      if (m.max_successive_diff == 0.0) continue;
      ++active[r];
      settled[r] += m.converged ? 1 : 0;
    }
  });

  Proposition1Report rep;
  const auto s = summarize(diff);
  rep.mean = s.mean;
  rep.std_error = s.std_error;
  rep.rms = s.rms;
  rep.tolerance = tolerance;
  std::size_t a = 0, c = 0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    a += active[r];
    c += settled[r];
  }
  rep.mode_converged_fraction = a ? static_cast<double>(c) / static_cast<double>(a) : 1.0;
  rep.pass = std::abs(rep.mean) <= 3.0 * rep.std_error && rep.rms < tolerance;
  rep.differences = std::move(diff);
  return rep;
}

struct IsometryReport {
  double lhs = 0.0;  // E[(g.B)^2]
  double lhs_std_error = 0.0;
  double rhs = 0.0;  // E int_0^T ||g||^2_{V_Q} ds
  double relative_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// E[(g.B)^2] against E int ||g_s||^2_{V_Q} ds. The right side uses the same
/// left-endpoint rule as the Ito sums so both sides see identical time weights.
inline IsometryReport isometry_diagnostic(const IntegrandRule& rule, const TimeGrid& grid, const CovarianceSpec& cov,
                                          std::size_t n_mc, std::uint64_t seed, double tolerance = 5e-2,
                                          const McOptions& mc = {}) {
  detail::require(n_mc >= 1, Errc::invalid_parameter, "Monte Carlo count must be at least 1");
  std::vector<double> squares(n_mc), norms(n_mc);
  parallel_for(n_mc, mc.workers, [&](std::size_t r) {
    const auto w = replica_noise(grid, cov, seed, r);
    const VQProcess g = rule(w);
    const double v = ito_series_integral(g, w).value();
    squares[r] = v * v;
    double q = 0.0;
    for (std::size_t j = 1; j <= w.modes(); ++j) {
      const auto c = g.coefficient(j);
      for (std::size_t k = 0; k < grid.steps(); ++k) q += c[k] * c[k];
    }
    norms[r] = q * grid.dt();
  });
  IsometryReport rep;
  const auto s = summarize(squares);
  rep.lhs = s.mean;
  rep.lhs_std_error = s.std_error;
  rep.rhs = summarize(norms).mean;
  rep.tolerance = tolerance;
  if (rep.rhs > 0.0)
    rep.relative_error = std::abs(rep.lhs - rep.rhs) / rep.rhs;
  else
    rep.relative_error = std::abs(rep.lhs);
  rep.pass = rep.relative_error <= tolerance;
  return rep;
}

/// Named integrands used by the experiments and tests.
namespace integrands {

/// Deterministic g = sum_j a_j v_j, constant in time.
inline IntegrandRule constant(std::vector<double> amplitudes) {
  return [a = std::move(amplitudes)](const CylindricalWienerPath& w) {
    return VQProcess::from_coefficients(w.grid, w.covariance, [&](std::size_t j, std::size_t) {
      return j <= a.size() ? a[j - 1] : 0.0;
    });
  };
}

/// g_t = 1_{t < cutoff} v_mode.
inline IntegrandRule indicator(std::size_t mode, double cutoff) {
  return [=](const CylindricalWienerPath& w) {
    return VQProcess::from_coefficients(w.grid, w.covariance, [&](std::size_t j, std::size_t k) {
      return (j == mode && w.grid.node(k) < cutoff) ? 1.0 : 0.0;
    });
  };
}

/// g_t = B_t(v_mode) v_mode (adapted, linear in the noise).
inline IntegrandRule noise_linear(std::size_t mode) {
  return [=](const CylindricalWienerPath& w) {
    return VQProcess::from_coefficients(w.grid, w.covariance, [&](std::size_t j, std::size_t k) {
      return j == mode ? w.mode(mode)[k] : 0.0;
    });
  };
}

/// g_t = B_T(v_mode) v_mode: constant in time but known only at T.
inline IntegrandRule terminal_anticipating(std::size_t mode) {
  return [=](const CylindricalWienerPath& w) {
    const double terminal = w.mode(mode).terminal();
    return VQProcess::from_coefficients(w.grid, w.covariance,
                                        [&](std::size_t j, std::size_t) { return j == mode ? terminal : 0.0; });
  };
}

}  // namespace integrands
}  // namespace rvcyl
