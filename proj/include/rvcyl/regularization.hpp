#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/stats.hpp"
#include "rvcyl/stochastic_paths.hpp"

namespace rvcyl {

enum class IntegralKind { forward, backward, symmetric, covariation };

inline const char* to_string(IntegralKind kind) noexcept {
  switch (kind) {
    case IntegralKind::forward: return "forward";
    case IntegralKind::backward: return "backward";
    case IntegralKind::symmetric: return "symmetric";
    case IntegralKind::covariation: return "covariation";
  }
  return "unknown";
}

/// Strictly decreasing positive regularization parameters eps_1 > ... > eps_L.
class EpsilonLadder {
 public:
  /// Smallest admissible eps, in units of the working grid step.
  static constexpr double floor_factor = 10.0;

  explicit EpsilonLadder(std::vector<double> values) : values_(std::move(values)) {
    detail::require(!values_.empty(), Errc::invalid_parameter, "epsilon ladder is empty");
    for (std::size_t l = 0; l < values_.size(); ++l) {
      detail::require(std::isfinite(values_[l]) && values_[l] > 0.0, Errc::invalid_parameter,
                      "epsilon ladder entries must be positive");
      if (l > 0)
        detail::require(values_[l] < values_[l - 1], Errc::invalid_parameter,
                        "epsilon ladder must be strictly decreasing");
    }
  }

  /// eps0, eps0*ratio, ..., eps0*ratio^(length-1).
  static EpsilonLadder geometric(double eps0, double ratio, std::size_t length) {
    detail::require(ratio > 0.0 && ratio < 1.0, Errc::invalid_parameter, "ladder ratio must lie in (0, 1)");
    detail::require(length >= 1, Errc::invalid_parameter, "ladder length must be at least 1");
    std::vector<double> v(length);
    double e = eps0;
    for (auto& x : v) {
      x = e;
      e *= ratio;
    }
    return EpsilonLadder(std::move(v));
  }

  /// Longest geometric ladder from eps0 whose smallest rung stays admissible on `grid`.
  static EpsilonLadder down_to_floor(double eps0, double ratio, const TimeGrid& grid) {
    const double floor = floor_factor * grid.dt();
    detail::require(eps0 >= floor, Errc::ladder_too_fine, "first ladder rung is already below 10*dt");
    std::vector<double> v;
    for (double e = eps0; e >= floor * (1.0 - 1e-12); e *= ratio) v.push_back(e);
    return EpsilonLadder(std::move(v));
  }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t l) const noexcept { return values_[l]; }
  [[nodiscard]] double smallest() const noexcept { return values_.back(); }

  [[nodiscard]] bool admissible(const TimeGrid& grid) const noexcept {
    return smallest() >= floor_factor * grid.dt() * (1.0 - 1e-12);
  }

  void require_admissible(const TimeGrid& grid) const {
    if (!admissible(grid))
      throw Error(Errc::ladder_too_fine, "smallest epsilon " + std::to_string(smallest()) +
                                             " is below 10*dt = " + std::to_string(floor_factor * grid.dt()));
  }

 private:
  std::vector<double> values_;
};

namespace detail {

/// X(t_k + offset*dt) with linear interpolation between nodes and constant
/// extension outside [0, T] (X_0 on the left, X_T on the right).
inline double shifted_read(std::span<const double> x, std::size_t k, double offset) noexcept {
  const double last = static_cast<double>(x.size() - 1);
  double pos = static_cast<double>(k) + offset;
  if (pos <= 0.0) return x.front();
  if (pos >= last) return x.back();
  double base = std::floor(pos);
  double frac = pos - base;
  // Shifts that are whole multiples of dt should read nodes exactly.
  if (frac < 1e-9) frac = 0.0;
  if (frac > 1.0 - 1e-9) {
    base += 1.0;
    frac = 0.0;
  }
  const auto i = static_cast<std::size_t>(base);
  if (frac == 0.0) return x[i];
  return (1.0 - frac) * x[i] + frac * x[i + 1];
}

inline void require_same_grid(const SamplePath& y, const SamplePath& x) {
  require(y.grid == x.grid, Errc::grid_mismatch, "integrand and integrator live on different time grids");
}

inline void require_eps(double eps) {
  require(std::isfinite(eps) && eps > 0.0, Errc::invalid_parameter, "epsilon must be positive");
}

inline void require_time(const TimeGrid& grid, double t) {
  require(t >= 0.0 && t <= grid.horizon() * (1.0 + 1e-12), Errc::invalid_parameter,
          "integration time must lie in [0, T]");
}

}  // namespace detail

/// Integrand of the chosen eps-integral at every grid node.
inline std::vector<double> eps_integrand(IntegralKind kind, const TimeGrid& grid, std::span<const double> y,
                                         std::span<const double> x, double eps) {
  detail::require_eps(eps);
  detail::require(y.size() == grid.size() && x.size() == grid.size(), Errc::grid_mismatch,
                  "path length does not match the time grid");
  const double shift = eps / grid.dt();
  std::vector<double> f(grid.size());
  switch (kind) {
    case IntegralKind::forward:
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = y[k] * (detail::shifted_read(x, k, shift) - x[k]) / eps;
      break;
    case IntegralKind::backward:
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = y[k] * (x[k] - detail::shifted_read(x, k, -shift)) / eps;
      break;
    case IntegralKind::symmetric:
      for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = y[k] * (detail::shifted_read(x, k, shift) - detail::shifted_read(x, k, -shift)) / (2.0 * eps);
      break;
    case IntegralKind::covariation:
      for (std::size_t k = 0; k < f.size(); ++k)
        f[k] = (detail::shifted_read(y, k, shift) - y[k]) * (detail::shifted_read(x, k, shift) - x[k]) / eps;
      break;
  }
  return f;
}

/// Cumulative trapezoidal integral of the eps-integrand: entry k is I(eps)(t_k).
inline std::vector<double> eps_curve(IntegralKind kind, const TimeGrid& grid, std::span<const double> y,
                                     std::span<const double> x, double eps) {
  std::vector<double> f = eps_integrand(kind, grid, y, x, eps);
  const double half_dt = 0.5 * grid.dt();
  double acc = 0.0;
  double prev = f[0];
  f[0] = 0.0;
  for (std::size_t k = 1; k < f.size(); ++k) {
    const double cur = f[k];
    acc += half_dt * (prev + cur);
    prev = cur;
    f[k] = acc;
  }
  return f;
}

/// I(eps)(t) for arbitrary t in [0, T]; the integrand is linear between nodes.
inline double eps_integral(IntegralKind kind, const SamplePath& y, const SamplePath& x, double eps, double t) {
  detail::require_same_grid(y, x);
  detail::require_time(y.grid, t);
  const TimeGrid& grid = y.grid;
  const std::vector<double> f = eps_integrand(kind, grid, y.view(), x.view(), eps);
  const double dt = grid.dt();
  const std::size_t full = std::min<std::size_t>(static_cast<std::size_t>(std::floor(t / dt + 1e-9)), grid.steps());
  double acc = 0.0;
  for (std::size_t k = 0; k < full; ++k) acc += 0.5 * dt * (f[k] + f[k + 1]);
  const double h = t - grid.node(full);
  if (full < grid.steps() && h > 0.0) {
    const double ft = f[full] + (f[full + 1] - f[full]) * h / dt;
    acc += 0.5 * h * (f[full] + ft);
  }
  return acc;
}

inline double eps_forward(const SamplePath& y, const SamplePath& x, double eps, double t) {
  return eps_integral(IntegralKind::forward, y, x, eps, t);
}
inline double eps_backward(const SamplePath& y, const SamplePath& x, double eps, double t) {
  return eps_integral(IntegralKind::backward, y, x, eps, t);
}
inline double eps_symmetric(const SamplePath& y, const SamplePath& x, double eps, double t) {
  return eps_integral(IntegralKind::symmetric, y, x, eps, t);
}
inline double eps_covariation(const SamplePath& y, const SamplePath& x, double eps, double t) {
  return eps_integral(IntegralKind::covariation, y, x, eps, t);
}

/// Controls the per-path ladder-stabilization detector.
struct ConvergencePolicy {
  /// Absolute tolerance on the last sup-difference; defaults to
  /// relative_tolerance * sup|X| * sup|Y|.
  std::optional<double> tolerance;
  double relative_tolerance = 0.25;
  /// Log-log slope of sup-differences against eps below which a path whose
  /// last difference also exceeds the tolerance is declared divergent.
  double divergence_slope = -0.5;
  /// ...and whose curve magnitudes sup_t |I(eps)| grow at least like eps^growth_slope.
  /// Integrands with structure finer than the ladder resolves show growing
  /// differences but bounded curves; genuine blow-up shows both.
  double growth_slope = -0.8;
  /// ...and whose finest curve exceeds magnitude_factor * sup|X| * sup|Y|,
  /// the natural size of an integral of Y against increments of X.
  double magnitude_factor = 1.0;
};

struct RegularizedIntegralResult {
  IntegralKind kind = IntegralKind::forward;
  std::vector<double> epsilons;
  std::vector<std::vector<double>> curves;  // curves[l][k] = I(eps_l)(t_k)
  std::vector<double> limit;                // value at the smallest eps
  std::vector<double> successive_sup_diff;  // sup_t |curve_l - curve_{l+1}|
  double max_successive_diff = 0.0;
  double difference_slope = 0.0;
  double magnitude_slope = 0.0;  // log sup_t |curve_l| against log eps_l
  double tolerance = 0.0;
  bool converged = false;
  bool diverging = false;

  /// Last sup-difference within tolerance: the per-path ucp criterion used by
  /// ensemble fractions (the converged flag additionally asks for a shrinking trend).
  [[nodiscard]] bool settled() const noexcept {
    return successive_sup_diff.empty() || successive_sup_diff.back() <= tolerance;
  }

  [[nodiscard]] double limit_at(std::size_t k) const { return limit.at(k); }
  [[nodiscard]] double terminal_limit() const { return limit.back(); }
};

/// Evaluates the eps-integral at every ladder rung over [0, upper] (upper is a
/// node index, default T) and reads the limit off the smallest rung.
inline RegularizedIntegralResult estimate_ucp_limit(IntegralKind kind, const TimeGrid& grid, std::span<const double> y,
                                                    std::span<const double> x, const EpsilonLadder& ladder,
                                                    const ConvergencePolicy& policy = {},
                                                    std::optional<std::size_t> upper = std::nullopt) {
  ladder.require_admissible(grid);
  const std::size_t last = std::min(upper.value_or(grid.steps()), grid.steps());

  RegularizedIntegralResult r;
  r.kind = kind;
  r.epsilons.assign(ladder.values().begin(), ladder.values().end());
  r.curves.reserve(ladder.size());
  for (double eps : ladder.values()) {
    auto c = eps_curve(kind, grid, y, x, eps);
    c.resize(last + 1);
    r.curves.push_back(std::move(c));
  }
  r.limit = r.curves.back();

  for (std::size_t l = 0; l + 1 < r.curves.size(); ++l) {
    double d = 0.0;
    for (std::size_t k = 0; k <= last; ++k) d = std::max(d, std::abs(r.curves[l][k] - r.curves[l + 1][k]));
    r.successive_sup_diff.push_back(d);
  }
  for (double d : r.successive_sup_diff) r.max_successive_diff = std::max(r.max_successive_diff, d);

  double sup_x = 0.0, sup_y = 0.0;
  for (std::size_t k = 0; k <= last; ++k) {
    sup_x = std::max(sup_x, std::abs(x[k]));
    sup_y = std::max(sup_y, std::abs(y[k]));
  }
  r.tolerance = policy.tolerance.value_or(policy.relative_tolerance * sup_x * sup_y);

  const auto& d = r.successive_sup_diff;
  if (d.empty()) return r;
  if (r.max_successive_diff == 0.0) {
    r.converged = true;
    return r;
  }

  if (d.size() >= 2) {
    const double floor = 1e-300 + 1e-15 * r.max_successive_diff;
    std::vector<double> log_eps, log_d;
    for (std::size_t l = 0; l < d.size(); ++l) {
      log_eps.push_back(0.5 * (std::log(r.epsilons[l]) + std::log(r.epsilons[l + 1])));
      log_d.push_back(std::log(std::max(d[l], floor)));
    }
    r.difference_slope = fit_slope(log_eps, log_d);

    std::vector<double> log_all, log_m;
    for (std::size_t l = 0; l < r.curves.size(); ++l) {
      double m = 0.0;
      for (double v : r.curves[l]) m = std::max(m, std::abs(v));
      log_all.push_back(std::log(r.epsilons[l]));
      log_m.push_back(std::log(std::max(m, 1e-300)));
    }
    r.magnitude_slope = fit_slope(log_all, log_m);
  }
  const bool small = d.back() <= r.tolerance;
  const bool shrinking = d.size() < 2 || r.difference_slope > 0.0;
  r.converged = small && shrinking;
  double finest = 0.0;
  for (double v : r.limit) finest = std::max(finest, std::abs(v));
  r.diverging = d.size() >= 2 && !small && r.difference_slope < policy.divergence_slope &&
                r.magnitude_slope < policy.growth_slope && finest > policy.magnitude_factor * sup_x * sup_y;
  return r;
}

inline RegularizedIntegralResult estimate_ucp_limit(IntegralKind kind, const SamplePath& y, const SamplePath& x,
                                                    const EpsilonLadder& ladder, const ConvergencePolicy& policy = {}) {
  detail::require_same_grid(y, x);
  return estimate_ucp_limit(kind, y.grid, y.view(), x.view(), ladder, policy);
}

/// Ensemble view of the ucp approximation: the limit is accepted when at
/// least `required_fraction` of the paths stabilize along the ladder.
struct UcpEnsemble {
  std::size_t paths = 0;
  std::size_t converged_paths = 0;
  double fraction = 0.0;
  double required_fraction = 0.95;

  [[nodiscard]] bool converged() const noexcept { return paths > 0 && fraction >= required_fraction; }
};

inline UcpEnsemble ucp_ensemble(std::span<const RegularizedIntegralResult> results, double required_fraction = 0.95) {
  UcpEnsemble e;
  e.required_fraction = required_fraction;
  e.paths = results.size();
  for (const auto& r : results) e.converged_paths += r.settled() ? 1 : 0;
  e.fraction = e.paths ? static_cast<double>(e.converged_paths) / static_cast<double>(e.paths) : 0.0;
  return e;
}

}  // namespace rvcyl
