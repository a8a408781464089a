#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rvcyl/regularization.hpp"
#include "rvcyl/stats.hpp"
#include "rvcyl/stochastic_paths.hpp"

using namespace rvcyl;

namespace {

SamplePath brownian(const TimeGrid& g, std::uint64_t seed) { return simulate_brownian(g, 1.0, seed); }

// Ito oracle by left-endpoint Riemann sums, independent of the eps machinery.
double ito_left_sum(const SamplePath& y, const SamplePath& x) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.values.size(); ++k) s += y[k] * (x[k + 1] - x[k]);
  return s;
}

double quadratic_variation(const SamplePath& y, const SamplePath& x) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.values.size(); ++k) s += (y[k + 1] - y[k]) * (x[k + 1] - x[k]);
  return s;
}

}  // namespace

TEST(EpsIntegrals, ZeroIntegrandGivesZero) {
  const auto g = make_time_grid(1.0, 256);
  const auto y = SamplePath::constant(g, 0.0);
  const auto x = brownian(g, 1);
  for (double eps : {0.1, 0.037, 0.01}) {
    for (double t : {0.0, 0.33, 1.0}) {
      EXPECT_EQ(eps_forward(y, x, eps, t), 0.0);
      EXPECT_EQ(eps_backward(y, x, eps, t), 0.0);
      EXPECT_EQ(eps_symmetric(y, x, eps, t), 0.0);
    }
  }
}

TEST(EpsIntegrals, LinearIntegratorWithConstantExtension) {
  // int_0^0.9 1 ds + int_0.9^1 (1 - s)/0.1 ds = 0.95, and its mirror image.
  for (std::size_t n : {10u, 100u, 1000u}) {
    const auto g = make_time_grid(1.0, n);
    const auto one = SamplePath::constant(g, 1.0);
    const auto s = SamplePath::from_function(g, [](double t) { return t; });
    EXPECT_NEAR(eps_forward(one, s, 0.1, 1.0), 0.95, 1e-12) << "N=" << n;
    EXPECT_NEAR(eps_backward(one, s, 0.1, 1.0), 0.95, 1e-12) << "N=" << n;
  }
}

TEST(EpsIntegrals, OffGridTimeUsesPartialSegment) {
  const auto g = make_time_grid(1.0, 10);
  const auto one = SamplePath::constant(g, 1.0);
  const auto s = SamplePath::from_function(g, [](double t) { return t; });
  // Integrand is 1 on [0, 0.9], so I(0.55) = 0.55.
  EXPECT_NEAR(eps_forward(one, s, 0.1, 0.55), 0.55, 1e-12);
}

TEST(EpsIntegrals, ErrorsAreTyped) {
  const auto g1 = make_time_grid(1.0, 16);
  const auto g2 = make_time_grid(1.0, 32);
  const auto a = brownian(g1, 1);
  const auto b = brownian(g2, 1);
  try {
    eps_forward(a, b, 0.1, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::grid_mismatch);
  }
  try {
    eps_forward(a, a, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_parameter);
  }
  EXPECT_THROW(eps_covariation(a, a, -0.1, 1.0), Error);
  EXPECT_THROW(eps_forward(a, a, 0.1, 1.5), Error);
}

TEST(EpsIntegrals, SymmetricIsAverageOfForwardAndBackward) {
  // Holds at every eps, every t and every path, off-grid shifts included.
  const auto g = make_time_grid(1.0, 1024);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = brownian(g, seed);
    const auto y = brownian(g, seed + 1000);
    for (double eps : {0.1, 0.0313, 0.0123}) {
      const auto fw = eps_curve(IntegralKind::forward, g, y.view(), x.view(), eps);
      const auto bw = eps_curve(IntegralKind::backward, g, y.view(), x.view(), eps);
      const auto sy = eps_curve(IntegralKind::symmetric, g, y.view(), x.view(), eps);
      const double scale = x.sup_abs() * y.sup_abs() + 1.0;
      for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(sy[k], 0.5 * (fw[k] + bw[k]), 1e-12 * scale);
    }
  }
}

TEST(EpsIntegrals, LinearInIntegrand) {
  const auto g = make_time_grid(1.0, 512);
  const auto x = brownian(g, 3);
  const auto y1 = brownian(g, 4);
  const auto y2 = SamplePath::from_function(g, [](double t) { return std::cos(3.0 * t); });
  const double a = 1.7, b = -0.4;
  std::vector<double> mix(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) mix[k] = a * y1[k] + b * y2[k];
  const SamplePath ym(g, mix);
  for (double eps : {0.05, 0.021}) {
    const double lhs = eps_forward(ym, x, eps, 0.8);
    const double rhs = a * eps_forward(y1, x, eps, 0.8) + b * eps_forward(y2, x, eps, 0.8);
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(EpsIntegrals, PathwiseDeterministic) {
  const auto g = make_time_grid(1.0, 512);
  const auto x = brownian(g, 8);
  const auto y = brownian(g, 9);
  for (auto kind : {IntegralKind::forward, IntegralKind::backward, IntegralKind::symmetric, IntegralKind::covariation})
    EXPECT_EQ(eps_curve(kind, g, y.view(), x.view(), 0.05), eps_curve(kind, g, y.view(), x.view(), 0.05));
}

TEST(EpsIntegrals, StieltjesSmokeTestForSmoothIntegrator) {
  // Bounded-variation X: forward and backward both approach int Y dX.
  const auto g = make_time_grid(1.0, 20000);
  const auto x = SamplePath::from_function(g, [](double t) { return t * t; });
  const auto y = SamplePath::from_function(g, [](double t) { return std::cos(t); });
  const double exact = 2.0 * (std::sin(1.0) + std::cos(1.0) - 1.0);
  double prev_err = HUGE_VAL;
  for (double eps : {0.04, 0.02, 0.01, 0.005}) {
    const double fw = eps_forward(y, x, eps, 1.0);
    const double bw = eps_backward(y, x, eps, 1.0);
    const double err = std::max(std::abs(fw - exact), std::abs(bw - exact));
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
  EXPECT_LT(prev_err, 0.01);
}

TEST(ItoLimits, ForwardMatchesItoOnAverage) {
  // int W dW^- -> (W_1^2 - 1)/2. The eps-error is int (avg_eps W - W) dW, a
  // martingale term: mean zero with variance close to eps/3.
  const auto g = make_time_grid(1.0, 4096);
  const double eps = 0.0125;
  std::vector<double> err, riemann_gap;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto w = brownian(g, derive_seed(42, {s}));
    const double oracle = 0.5 * (w.terminal() * w.terminal() - 1.0);
    err.push_back(eps_forward(w, w, eps, 1.0) - oracle);
    riemann_gap.push_back(ito_left_sum(w, w) - oracle);
  }
  const auto e = summarize(err);
  EXPECT_LT(std::abs(e.mean), 3.0 * e.std_error);
  EXPECT_GT(e.rms, 0.8 * std::sqrt(eps / 3.0));
  EXPECT_LT(e.rms, 1.2 * std::sqrt(eps / 3.0));
  // The oracle itself agrees with the left Riemann sum up to grid error.
  EXPECT_LT(summarize(riemann_gap).rms, 0.05);
}

TEST(ItoLimits, ForwardErrorShrinksWithEpsilon) {
  const auto g = make_time_grid(1.0, 8192);
  std::vector<double> coarse, fine;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto w = brownian(g, derive_seed(7, {s}));
    const double oracle = 0.5 * (w.terminal() * w.terminal() - 1.0);
    coarse.push_back(eps_forward(w, w, 0.0125, 1.0) - oracle);
    fine.push_back(eps_forward(w, w, 0.003125, 1.0) - oracle);
  }
  EXPECT_LT(summarize(fine).rms, summarize(coarse).rms);
}

TEST(ItoLimits, BackwardAndSymmetricLimits) {
  // E[I+(eps)] = T - eps/2 and E[I-(eps)] = 0, so the backward error against
  // (W^2+1)/2 has mean -eps/2 and the symmetric error against W^2/2 has mean -eps/4.
  const auto g = make_time_grid(1.0, 4096);
  const double eps = 0.0125;
  std::vector<double> back, sym, ident;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto w = brownian(g, derive_seed(43, {s}));
    const double w2 = w.terminal() * w.terminal();
    const double fw = eps_forward(w, w, eps, 1.0);
    const double bw = eps_backward(w, w, eps, 1.0);
    const double sy = eps_symmetric(w, w, eps, 1.0);
    const double cv = eps_covariation(w, w, eps, 1.0);
    back.push_back(bw - 0.5 * (w2 + 1.0));
    sym.push_back(sy - 0.5 * w2);
    ident.push_back(sy - (fw + 0.5 * cv));
  }
  const auto b = summarize(back);
  const auto y = summarize(sym);
  EXPECT_LT(std::abs(b.mean + eps / 2.0), 3.0 * b.std_error);
  EXPECT_LT(std::abs(y.mean + eps / 4.0), 3.0 * y.std_error);
  EXPECT_LT(b.rms, 0.15);
  EXPECT_LT(y.rms, 0.15);
  // Stratonovich = Ito + half the covariation, up to eps-boundary terms.
  EXPECT_LT(summarize(ident).rms, 2.0 * std::sqrt(eps / 3.0));
}

TEST(ItoLimits, AdaptedStepIntegrandMatchesItoSum) {
  // Y_s = W_{s_j} on [s_j, s_{j+1}) for a coarse partition of [0, 1].
  const auto g = make_time_grid(1.0, 4096);
  const std::size_t block = 512;
  std::vector<double> err;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto w = brownian(g, derive_seed(44, {s}));
    std::vector<double> step(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) step[k] = w[std::min(k, g.steps() - 1) / block * block];
    const SamplePath y(g, step);
    double ito = 0.0;
    for (std::size_t j = 0; j < g.steps(); j += block) ito += w[j] * (w[j + block] - w[j]);
    err.push_back(eps_forward(y, w, 0.003125, 1.0) - ito);
  }
  const auto e = summarize(err);
  EXPECT_LT(std::abs(e.mean), 3.0 * e.std_error + 1e-3);
  EXPECT_LT(e.rms, 0.05);
}

TEST(Covariation, BrownianQuadraticVariation) {
  // E[C(eps)(T)] = T - eps/2; the increment oracle sum (dW)^2 concentrates at T.
  const auto g = make_time_grid(1.0, 4096);
  const double eps = 0.0125;
  std::vector<double> c, qv;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto w = brownian(g, derive_seed(45, {s}));
    c.push_back(eps_covariation(w, w, eps, 1.0));
    qv.push_back(quadratic_variation(w, w));
  }
  EXPECT_NEAR(summarize(c).mean, 1.0, 0.05);
  EXPECT_NEAR(summarize(c).mean, summarize(qv).mean - eps / 2.0, 3.0 * summarize(c).std_error + 1e-3);
}

TEST(Covariation, IndependentPathsHaveZeroCovariation) {
  const auto g = make_time_grid(1.0, 4096);
  std::vector<double> c;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto w = brownian(g, derive_seed(46, {s}));
    const auto v = brownian(g, derive_seed(47, {s}));
    c.push_back(eps_covariation(w, v, 0.0125, 1.0));
  }
  const auto e = summarize(c);
  EXPECT_LT(std::abs(e.mean), 3.0 * e.std_error);
}

TEST(Covariation, SmoothIntegratorGivesVanishingCovariation) {
  const auto g = make_time_grid(1.0, 16384);
  const auto x = SamplePath::from_function(g, [](double t) { return t; });
  const auto w = brownian(g, 48);
  double prev = HUGE_VAL;
  for (double eps : {0.1, 0.01, 0.001}) {
    const double c = std::abs(eps_covariation(w, x, eps, 1.0));
    EXPECT_LT(c, std::max(prev, 1e-3));
    prev = c;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(EpsilonLadder, Validation) {
  EXPECT_THROW(EpsilonLadder({}), Error);
  EXPECT_THROW(EpsilonLadder({0.1, 0.1}), Error);
  EXPECT_THROW(EpsilonLadder({0.1, -0.05}), Error);
  const auto l = EpsilonLadder::geometric(0.1, 0.5, 4);
  EXPECT_DOUBLE_EQ(l.smallest(), 0.0125);

  const auto g = make_time_grid(1.0, 4096);
  EXPECT_TRUE(l.admissible(g));
  const auto floor = EpsilonLadder::down_to_floor(0.1, 0.5, g);
  EXPECT_GE(floor.smallest(), 10.0 * g.dt());
  EXPECT_LT(floor.smallest() * 0.5, 10.0 * g.dt());
}

TEST(UcpLimit, LadderBelowFloorIsRejected) {
  const auto g = make_time_grid(1.0, 100);
  const auto w = brownian(g, 1);
  try {
    estimate_ucp_limit(IntegralKind::forward, w, w, EpsilonLadder({0.2, 0.1, 0.05}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ladder_too_fine);
  }
}

TEST(UcpLimit, ConstantIntegrandTelescopes) {
  // With Y = 1 the eps-integral telescopes to window averages of W:
  // I(eps)(t) = avg_{[t, t+eps]} W - avg_{[0, eps]} W (trapezoidal windows).
  const auto g = make_time_grid(1.0, 16384);
  const auto w = brownian(g, 2026);
  const auto one = SamplePath::constant(g, 1.0);
  // Dyadic rungs keep every shift an integer number of steps.
  const auto ladder = EpsilonLadder::down_to_floor(0.125, 0.5, g);
  const auto r = estimate_ucp_limit(IntegralKind::forward, one, w, ladder);

  const double eps = ladder.smallest();
  const auto m = static_cast<std::size_t>(std::llround(eps / g.dt()));
  auto extended = [&](std::size_t k) { return w[std::min(k, g.steps())]; };
  auto window = [&](std::size_t k0) {
    double s = 0.0;
    for (std::size_t k = k0; k < k0 + m; ++k) s += 0.5 * g.dt() * (extended(k) + extended(k + 1));
    return s / eps;
  };
  const double head = window(0);
  double sup_gap = 0.0;
  for (std::size_t k = 0; k < g.size(); k += 97) {
    EXPECT_NEAR(r.limit[k], window(k) - head, 1e-10);
    sup_gap = std::max(sup_gap, std::abs(r.limit[k] - (w[k] - w[0])));
  }
  EXPECT_LT(sup_gap, 0.1);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.diverging);
  EXPECT_EQ(r.curves.size(), ladder.size());
  EXPECT_EQ(r.successive_sup_diff.size(), ladder.size() - 1);
  EXPECT_GE(r.max_successive_diff, 0.0);
}

TEST(UcpLimit, SmoothIntegratorCovariationConverges) {
  const auto g = make_time_grid(1.0, 16384);
  const auto x = SamplePath::from_function(g, [](double t) { return t; });
  const auto w = brownian(g, 31);
  const auto r = estimate_ucp_limit(IntegralKind::covariation, w, x, EpsilonLadder::down_to_floor(0.1, 0.5, g));
  EXPECT_TRUE(r.converged);
  double sup = 0.0;
  for (double v : r.limit) sup = std::max(sup, std::abs(v));
  EXPECT_LT(sup, 0.05);
}

TEST(UcpLimit, EnsembleFractionOverBrownianPaths) {
  const auto g = make_time_grid(1.0, 4096);
  const auto ladder = EpsilonLadder::down_to_floor(0.1, 0.5, g);
  std::vector<RegularizedIntegralResult> rs;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto w = brownian(g, derive_seed(50, {s}));
    rs.push_back(estimate_ucp_limit(IntegralKind::forward, w, w, ladder));
    EXPECT_FALSE(rs.back().diverging);
  }
  EXPECT_TRUE(ucp_ensemble(rs).converged());
}

TEST(UcpLimit, RoughCovariationIsFlaggedDivergent) {
  // A path with i.i.d. N(0, 1) node values has no quadratic variation limit:
  // C(eps) grows like 1/eps.
  const auto g = make_time_grid(1.0, 4096);
  GaussianStream normal(3);
  std::vector<double> v(g.size());
  for (auto& x : v) x = normal();
  const SamplePath rough(g, v);
  const auto r = estimate_ucp_limit(IntegralKind::covariation, rough, rough, EpsilonLadder::down_to_floor(0.1, 0.5, g));
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(r.diverging);
}
