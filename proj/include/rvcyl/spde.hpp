#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rvcyl/cylindrical.hpp"
#include "rvcyl/error.hpp"
#include "rvcyl/grid.hpp"
#include "rvcyl/heat_kernel.hpp"
#include "rvcyl/parallel.hpp"
#include "rvcyl/regularization.hpp"
#include "rvcyl/rng.hpp"
#include "rvcyl/sine_basis.hpp"
#include "rvcyl/stats.hpp"
#include "rvcyl/stochastic_paths.hpp"

namespace rvcyl {

/// Point of the parameter space R^d of the auxiliary family (d <= 3).
using ParamPoint = std::vector<double>;

/// Multiplicative noise coefficient g(t, x, u), Lipschitz in u.
struct NoiseCoefficient {
  std::string name;
  std::function<double(double t, double x, double u)> fn;
  double lipschitz = 0.0;

  double operator()(double t, double x, double u) const { return fn(t, x, u); }
};

/// Initial profile f(x, z); f(0, z) = f(1, z) = 0 and locally Lipschitz in z.
struct InitialProfile {
  std::string name;
  std::function<double(double x, std::span<const double> z)> fn;
  std::function<double(double bound)> lipschitz_on;  // C_N on |z| <= N

  double operator()(double x, std::span<const double> z) const { return fn(x, z); }
};

/// Initial randomness F(omega) as a functional of the noise realization.
struct InitialRandomness {
  std::string name;
  std::size_t dimension = 1;
  bool anticipating = false;
  std::function<ParamPoint(const CylindricalWienerPath&)> fn;

  ParamPoint operator()(const CylindricalWienerPath& w) const { return fn(w); }
};

using RegistryParams = std::map<std::string, double, std::less<>>;

/// Named families selectable from experiment configs.
namespace registry {

inline double param(const RegistryParams& p, std::string_view key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline std::vector<std::string> noise_coefficient_names() { return {"zero", "constant", "linear", "sin-profile"}; }
inline std::vector<std::string> initial_profile_names() {
  return {"zero", "sin-profile", "clipped-identity", "quadratic", "sum-profile"};
}
inline std::vector<std::string> initial_randomness_names() {
  return {"constant", "terminal-mode", "independent-gaussian"};
}

inline std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

inline NoiseCoefficient noise_coefficient(std::string_view name, const RegistryParams& p = {}) {
  if (name == "zero") return {"zero", [](double, double, double) { return 0.0; }, 0.0};
  if (name == "constant") {
    const double c = param(p, "c", 1.0);
    return {"constant", [c](double, double, double) { return c; }, 0.0};
  }
  if (name == "linear") {
    const double sigma = param(p, "sigma", 0.5);
    return {"linear", [sigma](double, double, double u) { return sigma * u; }, std::abs(sigma)};
  }
  if (name == "sin-profile") {
    const double c = param(p, "c", 1.0);
    return {"sin-profile", [c](double, double x, double) { return c * std::sin(std::numbers::pi * x); }, 0.0};
  }
  throw Error(Errc::config, "unknown noise coefficient '" + std::string(name) + "'; known: " +
                                join(noise_coefficient_names()));
}

inline InitialProfile initial_profile(std::string_view name, const RegistryParams& p = {}) {
  if (name == "zero")
    return {"zero", [](double, std::span<const double>) { return 0.0; }, [](double) { return 0.0; }};
  if (name == "sin-profile")
    return {"sin-profile",
            [](double x, std::span<const double> z) { return z[0] * std::sin(std::numbers::pi * x); },
            [](double) { return 1.0; }};
  if (name == "clipped-identity") {
    const double clip = param(p, "clip", 4.0);
    return {"clipped-identity",
            [clip](double x, std::span<const double> z) {
              return std::clamp(z[0], -clip, clip) * std::sin(std::numbers::pi * x);
            },
            [](double) { return 1.0; }};
  }
  if (name == "quadratic")
    return {"quadratic",
            [](double x, std::span<const double> z) { return z[0] * z[0] * std::sin(std::numbers::pi * x); },
            [](double bound) { return 2.0 * bound; }};
  if (name == "sum-profile")
    return {"sum-profile",
            [](double x, std::span<const double> z) {
              double s = 0.0;
              for (double v : z) s += v;
              return s * std::sin(std::numbers::pi * x);
            },
            [](double) { return std::sqrt(3.0); }};
  throw Error(Errc::config, "unknown initial profile '" + std::string(name) + "'; known: " +
                                join(initial_profile_names()));
}

inline InitialRandomness initial_randomness(std::string_view name, const RegistryParams& p = {}) {
  if (name == "constant") {
    const double z0 = param(p, "z0", 1.0);
    return {"constant", 1, false, [z0](const CylindricalWienerPath&) { return ParamPoint{z0}; }};
  }
  if (name == "terminal-mode") {
    const auto mode = static_cast<std::size_t>(param(p, "mode", 1.0));
    return {"terminal-mode", 1, true,
            [mode](const CylindricalWienerPath& w) { return ParamPoint{w.mode(mode).terminal()}; }};
  }
  if (name == "independent-gaussian") {
    const double scale = param(p, "scale", 1.0);
    return {"independent-gaussian", 1, false, [scale](const CylindricalWienerPath& w) {
              GaussianStream normal(derive_seed(w.seed, {stream::auxiliary}));
              return ParamPoint{scale * normal()};
            }};
  }
  throw Error(Errc::config, "unknown initial randomness '" + std::string(name) + "'; known: " +
                                join(initial_randomness_names()));
}

}  // namespace registry

/// du = u_xx dt + g(t,x,u) dW on [0,1] with u(t,0) = u(t,1) = 0 and u_0 = f(., F),
/// discretized with J noise modes and M solution modes.
struct SpdeProblem {
  TimeGrid time;
  SpaceGrid space;
  std::size_t noise_modes = 16;
  std::size_t kernel_modes = 32;
  NoiseCoefficient g = registry::noise_coefficient("zero");
  InitialProfile f = registry::initial_profile("sin-profile");
  InitialRandomness F = registry::initial_randomness("constant");

  void validate() const {
    detail::require(noise_modes >= 1 && kernel_modes >= 1, Errc::invalid_parameter, "mode counts must be positive");
    detail::require(noise_modes < space.points() && kernel_modes < space.points(), Errc::invalid_parameter,
                    "space grid with " + std::to_string(space.points()) + " cells cannot resolve " +
                        std::to_string(std::max(noise_modes, kernel_modes)) + " sine modes");
    detail::require(static_cast<bool>(g.fn) && static_cast<bool>(f.fn) && static_cast<bool>(F.fn),
                    Errc::invalid_parameter, "problem functions are not set");
  }

  [[nodiscard]] CovarianceSpec noise_covariance() const { return CovarianceSpec::standard(noise_modes); }
};

/// Solution surface u(t_k, x_i), row-major in time.
struct FieldPath {
  TimeGrid time;
  SpaceGrid space;
  std::vector<double> values;
  std::uint64_t seed = 0;
  ParamPoint z;
  std::string provenance;

  [[nodiscard]] double at(std::size_t k, std::size_t i) const { return values[k * space.size() + i]; }
  [[nodiscard]] std::span<const double> row(std::size_t k) const {
    return {values.data() + k * space.size(), space.size()};
  }

  /// max_k max(|u(t_k,0)|, |u(t_k,1)|); zero for every solver output.
  [[nodiscard]] double boundary_sup() const noexcept {
    double m = 0.0;
    for (std::size_t k = 0; k < time.size(); ++k) {
      m = std::max(m, std::abs(values[k * space.size()]));
      m = std::max(m, std::abs(values[k * space.size() + space.points()]));
    }
    return m;
  }

  [[nodiscard]] double sup_abs() const noexcept {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

inline constexpr double blow_up_threshold = 1e6;

namespace detail {

inline void require_noise_matches(const SpdeProblem& problem, const CylindricalWienerPath& noise) {
  require(noise.grid == problem.time, Errc::dimension, "noise grid differs from the problem's time grid");
  require(noise.modes() == problem.noise_modes, Errc::dimension,
          "noise has " + std::to_string(noise.modes()) + " modes, problem expects " +
              std::to_string(problem.noise_modes));
  require(noise.covariance.is_standard(), Errc::invalid_parameter,
          "the heat equation is driven by a standard cylindrical Wiener process");
}

}  // namespace detail

/// Spectral Galerkin / exponential Euler solution of the auxiliary problem
/// with deterministic parameter z:
///   u_hat_n(t_{k+1}) = e^{-lambda_n dt} (u_hat_n(t_k) + <g(t_k, ., u(t_k)) dW_k, v_n>),
/// where dW_k = sum_{j<=J} v_j dB_k(v_j) and g is evaluated at the left endpoint.
inline FieldPath solve_auxiliary(const SpdeProblem& problem, std::span<const double> z,
                                 const CylindricalWienerPath& noise) {
  problem.validate();
  detail::require_noise_matches(problem, noise);
  detail::require(!z.empty(), Errc::invalid_parameter, "parameter point is empty");
  for (double v : z) detail::require(std::isfinite(v), Errc::invalid_parameter, "parameter point is not finite");

  const TimeGrid& time = problem.time;
  const SpaceGrid& space = problem.space;
  const std::size_t m = problem.kernel_modes;
  const std::size_t jn = problem.noise_modes;
  const std::size_t width = space.size();
  const SineTable table(space, std::max(m, jn));

  FieldPath out{time, space, std::vector<double>(time.size() * width, 0.0), noise.seed,
                ParamPoint(z.begin(), z.end()), "auxiliary"};

  std::vector<double> field(width), coeffs(m), forcing(m), xi(width), prod(width);
  for (std::size_t i = 0; i < width; ++i) field[i] = problem.f(space.node(i), z);
  // Project with all M modes, then synthesize from the same modes.
  {
    const SineTable proj(space, m);
    proj.project(field, coeffs);
    proj.synthesize(coeffs, field);
  }
  std::copy(field.begin(), field.end(), out.values.begin());

  std::vector<double> damp(m);
  for (std::size_t n = 1; n <= m; ++n) damp[n - 1] = std::exp(-dirichlet_eigenvalue(n) * time.dt());

  for (std::size_t k = 0; k < time.steps(); ++k) {
    const double t = time.node(k);
    std::fill(xi.begin(), xi.end(), 0.0);
    for (std::size_t j = 1; j <= jn; ++j) {
      const double db = noise.mode(j)[k + 1] - noise.mode(j)[k];
      if (db == 0.0) continue;
      const auto v = table.mode(j);
      for (std::size_t i = 1; i + 1 < width; ++i) xi[i] += v[i] * db;
    }
    prod.front() = prod.back() = 0.0;
    for (std::size_t i = 1; i + 1 < width; ++i) prod[i] = problem.g(t, space.node(i), field[i]) * xi[i];

    const double w = space.dx();
    for (std::size_t n = 1; n <= m; ++n) {
      const auto v = table.mode(n);
      double acc = 0.0;
      for (std::size_t i = 1; i + 1 < width; ++i) acc += prod[i] * v[i];
      coeffs[n - 1] = damp[n - 1] * (coeffs[n - 1] + w * acc);
    }

    std::fill(field.begin(), field.end(), 0.0);
    double sup = 0.0;
    for (std::size_t n = 1; n <= m; ++n) {
      const double c = coeffs[n - 1];
      const auto v = table.mode(n);
      for (std::size_t i = 1; i + 1 < width; ++i) field[i] += c * v[i];
    }
    for (std::size_t i = 0; i < width; ++i) sup = std::max(sup, std::abs(field[i]));
    if (!(sup <= blow_up_threshold))
      throw Error(Errc::blow_up, "field sup-norm exceeded 1e6 at t = " + std::to_string(time.node(k + 1)));
    std::copy(field.begin(), field.end(), out.values.begin() + static_cast<std::ptrdiff_t>((k + 1) * width));
  }
  return out;
}

inline FieldPath solve_auxiliary(const SpdeProblem& problem, double z, const CylindricalWienerPath& noise) {
  const double p[1] = {z};
  return solve_auxiliary(problem, std::span<const double>(p, 1), noise);
}

/// u = v^F: evaluate F on the full noise realization (terminal values
/// included), then solve the auxiliary problem at z = F(omega) on the same noise.
inline FieldPath solve_substitution(const SpdeProblem& problem, const CylindricalWienerPath& noise) {
  const ParamPoint z = problem.F(noise);
  for (double v : z)
    detail::require(std::isfinite(v) && std::abs(v) <= blow_up_threshold, Errc::out_of_range,
                    "initial randomness F(omega) = " + std::to_string(v) + " is outside the admissible range");
  FieldPath u = solve_auxiliary(problem, z, noise);
  u.provenance = "substitution:" + problem.F.name;
  return u;
}

/// Parameter grid for the Lipschitz diagnostic: one strictly increasing axis
/// per dimension, combined as a tensor product.
struct ZGrid {
  std::vector<std::vector<double>> axes;

  void validate() const {
    detail::require(!axes.empty() && axes.size() <= 3, Errc::invalid_parameter, "z-grid dimension must be 1..3");
    for (const auto& a : axes) {
      detail::require(!a.empty(), Errc::invalid_parameter, "z-grid axis is empty");
      for (std::size_t i = 1; i < a.size(); ++i)
        detail::require(a[i] > a[i - 1], Errc::invalid_parameter, "z-grid axes must be strictly increasing");
    }
    detail::require(points().size() >= 2, Errc::invalid_parameter, "z-grid needs at least two points");
  }

  [[nodiscard]] std::vector<ParamPoint> points() const {
    std::vector<ParamPoint> pts{ParamPoint{}};
    for (const auto& axis : axes) {
      std::vector<ParamPoint> next;
      for (const auto& p : pts)
        for (double v : axis) {
          auto q = p;
          q.push_back(v);
          next.push_back(std::move(q));
        }
      pts = std::move(next);
    }
    return pts;
  }

  /// N with |z| <= N over the grid.
  [[nodiscard]] double bound() const {
    double n = 0.0;
    for (const auto& p : points()) {
      double s = 0.0;
      for (double v : p) s += v * v;
      n = std::max(n, std::sqrt(s));
    }
    return n;
  }
};

struct LipschitzReport {
  struct Pair {
    std::size_t a = 0, b = 0;
    double separation = 0.0;
    double ratio = 0.0;  // sup_{t,x} E|v^a - v^b|^2 / |z_a - z_b|^2
  };
  std::vector<ParamPoint> points;
  std::vector<Pair> pairs;
  std::vector<double> separations;  // distinct, increasing
  std::vector<double> separation_max_ratio;
  double empirical_constant = 0.0;
  double separation_slope = 0.0;
  double growth_threshold = -0.1;
  bool pass = false;
};

/// Monte Carlo estimate of sup_{t,x} E|v^{z1} - v^{z2}|^2 / |z1 - z2|^2 over all
/// z-grid pairs, all parameters sharing each noise realization.
inline LipschitzReport lipschitz_diagnostic(const SpdeProblem& problem, const ZGrid& zgrid, std::size_t n_mc,
                                            std::uint64_t seed, const McOptions& mc = {}) {
  problem.validate();
  zgrid.validate();
  detail::require(n_mc >= 1, Errc::invalid_parameter, "Monte Carlo count must be at least 1");

  LipschitzReport rep;
  rep.points = zgrid.points();
  const auto& pts = rep.points;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double s = 0.0;
      for (std::size_t d = 0; d < pts[a].size(); ++d) s += (pts[a][d] - pts[b][d]) * (pts[a][d] - pts[b][d]);
      rep.pairs.push_back({a, b, std::sqrt(s), 0.0});
    }

  const std::size_t cells = problem.time.size() * problem.space.size();
  std::vector<std::vector<double>> acc(rep.pairs.size(), std::vector<double>(cells, 0.0));
  std::vector<FieldPath> fields(pts.size(), FieldPath{problem.time, problem.space, {}, 0, {}, {}});
  for (std::size_t r = 0; r < n_mc; ++r) {
    const auto noise = replica_noise(problem.time, problem.noise_covariance(), seed, r);
    parallel_for(pts.size(), mc.workers, [&](std::size_t p) { fields[p] = solve_auxiliary(problem, pts[p], noise); });
    parallel_for(rep.pairs.size(), mc.workers, [&](std::size_t q) {
      const auto& va = fields[rep.pairs[q].a].values;
      const auto& vb = fields[rep.pairs[q].b].values;
      auto& sink = acc[q];
      for (std::size_t c = 0; c < cells; ++c) {
        const double d = va[c] - vb[c];
        sink[c] += d * d;
      }
    });
  }

  for (std::size_t q = 0; q < rep.pairs.size(); ++q) {
    double sup = 0.0;
    for (double v : acc[q]) sup = std::max(sup, v / static_cast<double>(n_mc));
    const double sep = rep.pairs[q].separation;
    rep.pairs[q].ratio = sup / (sep * sep);
    rep.empirical_constant = std::max(rep.empirical_constant, rep.pairs[q].ratio);
  }

  // Group by separation and look for growth of the ratio as pairs get closer.
  std::vector<std::pair<double, double>> by_sep;
  for (const auto& pr : rep.pairs) by_sep.emplace_back(pr.separation, pr.ratio);
  std::sort(by_sep.begin(), by_sep.end());
  for (const auto& [sep, ratio] : by_sep) {
    if (!rep.separations.empty() && std::abs(sep - rep.separations.back()) <= 1e-12 * sep) {
      rep.separation_max_ratio.back() = std::max(rep.separation_max_ratio.back(), ratio);
    } else {
      rep.separations.push_back(sep);
      rep.separation_max_ratio.push_back(ratio);
    }
  }
  bool finite = true;
  std::vector<double> ls, lr;
  for (std::size_t i = 0; i < rep.separations.size(); ++i) {
    finite = finite && std::isfinite(rep.separation_max_ratio[i]);
    ls.push_back(std::log(rep.separations[i]));
    lr.push_back(std::log(std::max(rep.separation_max_ratio[i], 1e-300)));
  }
  rep.separation_slope = fit_slope(ls, lr);
  rep.pass = finite && rep.separations.size() >= 2 && rep.separation_slope >= rep.growth_threshold;
  return rep;
}

struct MildProbe {
  double t = 0.0, x = 0.0;
  std::size_t k = 0, i = 0;
  double value = 0.0;          // u(t, x)
  double initial_term = 0.0;   // (e^{t Laplacian} f(., z))(x)
  double forward_term = 0.0;   // Russo-Vallois cylindrical forward integral
  double ito_term = 0.0;       // same integrand, Ito series
  double residual = 0.0;       // |u - initial - forward|
  double ito_residual = 0.0;   // |u - initial - ito|
  bool series_converged = false;
};

struct MildReport {
  std::vector<MildProbe> probes;
  double max_residual = 0.0;
  double rms_residual = 0.0;
  double max_ito_residual = 0.0;
};

/// Checks the mild formulation
///   u(t,x) = int G(t,x,y) f(y,z) dy + int_0^t G(t-s,x,.) g(s,.,u) dW^-_s
/// at each probe. The stochastic term is assembled from the coordinates of
/// y -> G(t-s,x,y) g(s,y,u(s,y)) and integrated with the cylindrical forward
/// integral, so it stays meaningful when u anticipates the noise.
inline MildReport verify_mild(const SpdeProblem& problem, const FieldPath& u, const CylindricalWienerPath& noise,
                              const EpsilonLadder& ladder, std::span<const std::pair<double, double>> probes,
                              const ConvergencePolicy& mode_policy = {}) {
  problem.validate();
  detail::require_noise_matches(problem, noise);
  detail::require(u.time == problem.time && u.space == problem.space, Errc::dimension,
                  "field grids differ from the problem grids");
  detail::require(!u.z.empty(), Errc::invalid_parameter, "field carries no parameter point");
  ladder.require_admissible(problem.time);

  const HeatKernel kernel(problem.kernel_modes);
  const TimeGrid& time = problem.time;
  const SpaceGrid& space = problem.space;
  const std::size_t width = space.size();
  const std::size_t m = problem.kernel_modes;
  const std::size_t jn = problem.noise_modes;
  const SineTable table(space, std::max(m, jn));
  const CovarianceSpec cov = problem.noise_covariance();

  std::vector<double> f0(width);
  for (std::size_t i = 0; i < width; ++i) f0[i] = problem.f(space.node(i), u.z);

  MildReport rep;
  double sq = 0.0;
  std::vector<double> row(width), h(width), weight(m), lam(m);
  for (std::size_t n = 1; n <= m; ++n) lam[n - 1] = dirichlet_eigenvalue(n);

  for (const auto& [pt, px] : probes) {
    kernel.require_admissible(pt);
    MildProbe probe;
    probe.k = time.nearest_index(pt);
    probe.i = space.nearest_index(px);
    probe.t = time.node(probe.k);
    probe.x = space.node(probe.i);
    kernel.require_admissible(probe.t);
    probe.value = u.at(probe.k, probe.i);
    probe.initial_term = apply_kernel(kernel, probe.t, space, f0)[probe.i];

    VQProcess g = VQProcess::zero(time, cov);
    for (std::size_t s = 0; s <= probe.k; ++s) {
      const double tau = probe.t - time.node(s);
      for (std::size_t n = 1; n <= m; ++n) weight[n - 1] = table.mode(n)[probe.i] * std::exp(-lam[n - 1] * tau);
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t n = 1; n <= m; ++n) {
        const auto v = table.mode(n);
        const double c = weight[n - 1];
        for (std::size_t i = 1; i + 1 < width; ++i) row[i] += c * v[i];
      }
      const auto us = u.row(s);
      const double ts = time.node(s);
      for (std::size_t i = 0; i < width; ++i) h[i] = row[i] * problem.g(ts, space.node(i), us[i]);
      for (std::size_t j = 1; j <= jn; ++j) g.coefficients[j - 1][s] = vq_coefficient(cov, j, table, h);
    }

    const auto ito = ito_series_integral(g, noise, probe.k);
    const auto fwd = rv_cylindrical_forward(g, noise, ladder, probe.k, mode_policy);
    probe.ito_term = ito.value();
    probe.forward_term = fwd.value();
    probe.series_converged = fwd.converged;
    probe.residual = std::abs(probe.value - probe.initial_term - probe.forward_term);
    probe.ito_residual = std::abs(probe.value - probe.initial_term - probe.ito_term);
    rep.max_residual = std::max(rep.max_residual, probe.residual);
    rep.max_ito_residual = std::max(rep.max_ito_residual, probe.ito_residual);
    sq += probe.residual * probe.residual;
    rep.probes.push_back(probe);
  }
  if (!rep.probes.empty()) rep.rms_residual = std::sqrt(sq / static_cast<double>(rep.probes.size()));
  return rep;
}

struct MildEnsembleReport {
  std::vector<double> residuals;  // replica-major, probe-minor
  double rms_residual = 0.0;
  double max_ito_residual = 0.0;
  double max_boundary = 0.0;
  std::size_t paths = 0;
};

/// verify_mild over n_mc substitution solutions, one noise realization each.
inline MildEnsembleReport mild_residual_ensemble(const SpdeProblem& problem, const EpsilonLadder& ladder,
                                                 std::span<const std::pair<double, double>> probes, std::size_t n_mc,
                                                 std::uint64_t seed, const McOptions& mc = {}) {
  detail::require(n_mc >= 1, Errc::invalid_parameter, "Monte Carlo count must be at least 1");
  std::vector<MildReport> per(n_mc);
  std::vector<double> boundary(n_mc);
  parallel_for(n_mc, mc.workers, [&](std::size_t r) {
    const auto noise = replica_noise(problem.time, problem.noise_covariance(), seed, r);
    const auto u = solve_substitution(problem, noise);
    boundary[r] = u.boundary_sup();
    per[r] = verify_mild(problem, u, noise, ladder, probes);
  });
  MildEnsembleReport rep;
  rep.paths = n_mc;
  double sq = 0.0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    for (const auto& p : per[r].probes) {
      rep.residuals.push_back(p.residual);
      sq += p.residual * p.residual;
    }
    rep.max_ito_residual = std::max(rep.max_ito_residual, per[r].max_ito_residual);
    rep.max_boundary = std::max(rep.max_boundary, boundary[r]);
  }
  if (!rep.residuals.empty()) rep.rms_residual = std::sqrt(sq / static_cast<double>(rep.residuals.size()));
  return rep;
}

/// Closed-form variance of the additive-noise stochastic convolution with
/// J noise modes and M kernel modes: sum_{n<=min(J,M)} v_n(x)^2 (1 - e^{-2 lambda_n t}) / (2 lambda_n).
inline double additive_noise_variance(std::size_t noise_modes, std::size_t kernel_modes, double t, double x) {
  double acc = 0.0;
  for (std::size_t n = 1; n <= std::min(noise_modes, kernel_modes); ++n) {
    const double v = sine_mode(n, x);
    const double lam = dirichlet_eigenvalue(n);
    acc += v * v * (1.0 - std::exp(-2.0 * lam * t)) / (2.0 * lam);
  }
  return acc;
}

}  // namespace rvcyl
