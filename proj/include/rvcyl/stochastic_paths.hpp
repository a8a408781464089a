#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/rng.hpp"

namespace rvcyl {

/// Real-valued process sampled on every node of a TimeGrid.
struct SamplePath {
  TimeGrid grid;
  std::vector<double> values;

  SamplePath(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    detail::require(values.size() == grid.size(), Errc::dimension,
                    "path has " + std::to_string(values.size()) + " values for " +
                        std::to_string(grid.size()) + " grid nodes");
  }

  /// Path s -> fn(s) sampled on the grid.
  template <class Fn>
  static SamplePath from_function(const TimeGrid& g, Fn&& fn) {
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(g.node(k));
    return SamplePath(g, std::move(v));
  }

  static SamplePath constant(const TimeGrid& g, double c) { return SamplePath(g, std::vector<double>(g.size(), c)); }

  [[nodiscard]] std::span<const double> view() const noexcept { return values; }
  [[nodiscard]] double operator[](std::size_t k) const noexcept { return values[k]; }
  [[nodiscard]] double terminal() const noexcept { return values.back(); }

  [[nodiscard]] double sup_abs() const noexcept {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Diagonal covariance operator Q in the sine basis of L^2([0,1]):
/// Q e_j = q_j e_j with e_j(x) = sqrt(2) sin(j pi x).
struct CovarianceSpec {
  std::vector<double> eigenvalues;

  static CovarianceSpec standard(std::size_t modes) { return {std::vector<double>(modes, 1.0)}; }

  [[nodiscard]] std::size_t modes() const noexcept { return eigenvalues.size(); }

  [[nodiscard]] bool is_standard() const noexcept {
    return std::all_of(eigenvalues.begin(), eigenvalues.end(), [](double q) { return q == 1.0; });
  }

  void validate() const {
    detail::require(!eigenvalues.empty(), Errc::invalid_parameter, "covariance needs at least one mode");
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
      detail::require(std::isfinite(eigenvalues[j]) && eigenvalues[j] >= 0.0, Errc::invalid_parameter,
                      "covariance eigenvalue q_" + std::to_string(j + 1) + " must be finite and nonnegative");
    }
  }

  friend bool operator==(const CovarianceSpec&, const CovarianceSpec&) = default;
};

/// Truncated cylindrical Wiener process: B(v_j) for the first J elements of a
/// V_Q-orthonormal basis. Each component is a standard Brownian motion.
struct CylindricalWienerPath {
  TimeGrid grid;
  CovarianceSpec covariance;
  std::vector<SamplePath> paths;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t modes() const noexcept { return paths.size(); }

  /// Component B(v_j), j is 1-based.
  [[nodiscard]] const SamplePath& mode(std::size_t j) const { return paths.at(j - 1); }
};

inline SamplePath simulate_brownian(const TimeGrid& grid, double variance_rate, std::uint64_t seed) {
  detail::require(std::isfinite(variance_rate) && variance_rate >= 0.0, Errc::invalid_parameter,
                  "variance rate must be nonnegative, got " + std::to_string(variance_rate));
  std::vector<double> v(grid.size(), 0.0);
  if (variance_rate == 0.0) return SamplePath(grid, std::move(v));
  const double step_sd = std::sqrt(variance_rate * grid.dt());
  GaussianStream normal(seed);
  for (std::size_t k = 0; k < grid.steps(); ++k) v[k + 1] = v[k] + step_sd * normal();
  return SamplePath(grid, std::move(v));
}

/// Mode j draws from its own substream derived from (seed, j), so raising J
/// leaves the first J components untouched.
inline CylindricalWienerPath simulate_cylindrical(const TimeGrid& grid, const CovarianceSpec& cov, std::uint64_t seed) {
  cov.validate();
  CylindricalWienerPath w{grid, cov, {}, seed};
  w.paths.reserve(cov.modes());
  for (std::size_t j = 1; j <= cov.modes(); ++j) {
    // Modes with q_j = 0 carry no noise in any V_Q-normalized direction.
    const double rate = cov.eigenvalues[j - 1] > 0.0 ? 1.0 : 0.0;
    w.paths.push_back(simulate_brownian(grid, rate, derive_seed(seed, {stream::mode, j})));
  }
  return w;
}

}  // namespace rvcyl
