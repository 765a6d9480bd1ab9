#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "ensx/error.hpp"
#include "ensx/gev.hpp"
#include "ensx/gev_fit.hpp"
#include "ensx/ks.hpp"
#include "ensx/quantile.hpp"
#include "ensx/random.hpp"

using namespace ensx;
using doctest::Approx;

namespace {

// Independent oracle for the MLE: damped Newton ascent with its own
// finite-difference derivatives, run from several starting points.
GevParams newton_oracle(std::span<const double> x, GevParams start) {
  Eigen::Vector3d t = start.as_vector();
  auto ll = [&](const Eigen::Vector3d& v) {
    return gev_loglik<double>(GevParams::from_vector(v), std::span<const double>(x));
  };
  for (int it = 0; it < 200; ++it) {
    Eigen::Vector3d g;
    Eigen::Matrix3d h;
    const double e = 1e-4;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d d = Eigen::Vector3d::Zero();
      d(i) = e;
      g(i) = (ll(t + d) - ll(t - d)) / (2 * e);
      for (int j = 0; j < 3; ++j) {
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        c(j) = e;
        h(i, j) = (ll(t + d + c) - ll(t + d - c) - ll(t - d + c) + ll(t - d - c)) / (4 * e * e);
      }
    }
    Eigen::Vector3d dir = -h.ldlt().solve(g);
    if (g.dot(dir) <= 0) dir = g * 1e-3;  // fall back to ascent
    double lambda = 1.0;
    const double f0 = ll(t);
    while (lambda > 1e-8 && !(ll(t + lambda * dir) > f0)) lambda *= 0.5;
    if (lambda <= 1e-8) break;
    t += lambda * dir;
    if (dir.norm() * lambda < 1e-10) break;
  }
  return GevParams::from_vector(t);
}

}  // namespace

TEST_CASE("gev_cdf closed-form values") {
  CHECK(gev_cdf(0.0, GevParams{0, 1, 0}) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(gev_cdf(-2.0, GevParams{0, 1, 0.5}) == 0.0);
  CHECK(gev_cdf(-3.0, GevParams{0, 1, 0.5}) == 0.0);
  // mpmath: exp(-1.2^-10)
  CHECK(gev_cdf(2.0, GevParams{0, 1, 0.1}) == Approx(0.8508617811845150).epsilon(1e-13));
  // Upper endpoint for negative shape.
  CHECK(gev_cdf(5.0, GevParams{0, 1, -0.5}) == 1.0);
  CHECK_THROWS_AS(gev_cdf(0.0, GevParams{0, 0, 0.1}), DomainError);
  CHECK_THROWS_AS(gev_cdf(0.0, GevParams{0, -1, 0.1}), DomainError);
}

TEST_CASE("gev_quantile closed-form values") {
  CHECK(gev_quantile(0.99, GevParams{0, 1, 0}) == Approx(4.600149226776580).epsilon(1e-13));
  CHECK(gev_quantile(0.99, GevParams{0, 1, 0.1}) == Approx(5.840976237963229).epsilon(1e-13));
  CHECK(gev_quantile(std::exp(-1.0), GevParams{12.5, 3, 0}) == Approx(12.5).epsilon(1e-14));
  CHECK_THROWS_AS(gev_quantile(0.0, GevParams{}), DomainError);
  CHECK_THROWS_AS(gev_quantile(1.0, GevParams{}), DomainError);
  CHECK_THROWS_AS(gev_quantile(-0.1, GevParams{}), DomainError);
}

TEST_CASE("quantile/cdf roundtrip and Gumbel-branch continuity") {
  const double probs[] = {0.001, 0.01, 0.5, 0.9, 0.99, 0.999};
  const double shapes[] = {-0.3, -1e-9, 0.0, 1e-9, 0.3};
  for (double xi : shapes) {
    const GevParams p{3.0, 2.0, xi};
    for (double q : probs) {
      CHECK(std::abs(gev_cdf(gev_quantile(q, p), p) - q) < 1e-9);
    }
  }
  for (double q : probs) {
    const double base = gev_quantile(q, GevParams{0, 2.0, 0.0});
    CHECK(std::abs(gev_quantile(q, GevParams{0, 2.0, 1e-7}) - base) < 1e-5 * 2.0);
    CHECK(std::abs(gev_quantile(q, GevParams{0, 2.0, -1e-7}) - base) < 1e-5 * 2.0);
  }
}

TEST_CASE("gev_cdf is nondecreasing") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const GevParams p{rng.normal() * 5, 0.1 + 3 * rng.uniform(), rng.uniform() - 0.5};
    double prev = -1.0;
    for (double x = -30; x <= 30; x += 0.25) {
      const double f = gev_cdf(x, p);
      CHECK(f >= prev);
      prev = f;
    }
  }
}

TEST_CASE("gev_loglik values and sentinel") {
  const std::vector<double> zero{0.0};
  CHECK(gev_loglik(GevParams{0, 1, 0}, zero) == Approx(-1.0));
  const std::vector<double> five{5.0};
  // mpmath: -3 log 3.5 - 3.5^-2
  CHECK(gev_loglik(GevParams{0, 1, 0.5}, five) == Approx(-3.8399215585473285).epsilon(1e-13));
  const std::vector<double> below{-100.0};
  CHECK(gev_loglik(GevParams{0, 1, 0.5}, below) == kLogLikSentinel);
  CHECK_THROWS_AS(gev_loglik(GevParams{}, std::span<const double>{}), DomainError);

  // Vectorised and generic paths agree.
  const auto x = gev_sample(GevParams{20, 5, 0.1}, 500, 3);
  for (double xi : {-0.2, -5e-5, 0.0, 5e-5, 0.1, 0.4}) {
    const GevParams p{20, 5, xi};
    const double fast = gev_loglik(p, std::span<const double>(x));
    const double generic = gev_loglik<double>(p, std::span<const double>(x));
    if (generic == kLogLikSentinel) {
      CHECK(fast == kLogLikSentinel);
    } else {
      CHECK(fast == Approx(generic).epsilon(1e-12));
    }
  }
}

TEST_CASE("gev_sample determinism and distribution") {
  const GevParams p{20, 5, 0.1};
  CHECK(gev_sample(p, 5, 42) == gev_sample(p, 5, 42));
  CHECK(gev_sample(p, 5, 42) != gev_sample(p, 5, 43));
  CHECK_THROWS_AS(gev_sample(p, 0, 1), DomainError);

  const auto g = gev_sample(GevParams{0, 1, 0}, 1'000'000, 9);
  CHECK(std::abs(mean(g) - 0.5772156649) < 0.005);

  const auto s = gev_sample(p, 100'000, 5);
  CHECK(ks_test(s, p).statistic < 0.01);
}

TEST_CASE("fit_gev_mle recovers large-sample truth") {
  const auto x = gev_sample(GevParams{20, 5, 0.1}, 100'000, 1);
  const GevFit fit = fit_gev_mle(x);
  CHECK(fit.converged);
  CHECK(fit.n_samples == 100'000);
  CHECK(fit.params.location >= 19.9);
  CHECK(fit.params.location <= 20.1);
  CHECK(fit.params.scale >= 4.9);
  CHECK(fit.params.scale <= 5.1);
  CHECK(fit.params.shape >= 0.08);
  CHECK(fit.params.shape <= 0.12);
}

TEST_CASE("fit_gev_mle agrees with an independent Newton oracle") {
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const auto x = gev_sample(GevParams{20, 5, 0.1}, 2000, seed);
    const GevFit fit = fit_gev_mle(x);
    REQUIRE(fit.converged);
    GevParams best = fit.params;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (GevParams start : {GevParams{18, 4, 0.0}, GevParams{21, 6, 0.2}, GevParams{20, 5, 0.05}}) {
      const GevParams o = newton_oracle(x, start);
      const double ll = gev_loglik<double>(o, std::span<const double>(x));
      if (ll > best_ll) {
        best_ll = ll;
        best = o;
      }
    }
    CHECK(fit.log_likelihood >= best_ll - 1e-6);
    CHECK(fit.params.location == Approx(best.location).epsilon(1e-4));
    CHECK(fit.params.scale == Approx(best.scale).epsilon(1e-4));
    CHECK(fit.params.shape == Approx(best.shape).epsilon(1e-3));
  }
}

TEST_CASE("fit_gev_mle edge cases") {
  const std::vector<double> flat(30, 7.0);
  CHECK_THROWS_WITH_AS(fit_gev_mle(flat), "zero variance", FitError);
  CHECK_THROWS_AS(fit_gev_mle(std::vector<double>{}), DomainError);

  auto x = gev_sample(GevParams{20, 5, 0.1}, 96, 8);
  const GevFit a = fit_gev_mle(x);
  std::reverse(x.begin(), x.end());
  std::rotate(x.begin(), x.begin() + 17, x.end());
  const GevFit b = fit_gev_mle(x);
  CHECK(a == b);

  const auto small = gev_sample(GevParams{20, 5, 0.1}, 12, 8);
  const GevFit s = fit_gev_mle(small);
  CHECK_FALSE(s.converged);
  CHECK_FALSE(s.warnings.empty());
  CHECK_THROWS_AS(return_level(s, 100), DomainError);
}

TEST_CASE("fit covariance is symmetric with nonnegative diagonal") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = gev_sample(GevParams{20, 5, 0.1}, 96, seed);
    const GevFit fit = fit_gev_mle(x);
    CHECK((fit.covariance - fit.covariance.transpose()).norm() == 0.0);
    CHECK((fit.covariance.diagonal().array() >= 0.0).all());
  }
}

TEST_CASE("fitted parameters are a local maximum") {
  const auto x = gev_sample(GevParams{20, 5, 0.1}, 500, 21);
  const GevFit fit = fit_gev_mle(x);
  REQUIRE(fit.converged);
  Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const GevParams q{fit.params.location + 0.05 * rng.normal(),
                      fit.params.scale * std::exp(0.02 * rng.normal()),
                      fit.params.shape + 0.01 * rng.normal()};
    CHECK(gev_loglik(q, std::span<const double>(x)) <= fit.log_likelihood);
  }
}

TEST_CASE("return_level delta method") {
  GevFit exact;
  exact.params = GevParams{0, 1, 0};
  exact.converged = true;
  exact.n_samples = 100;
  const auto rl = return_level(exact, 100);
  CHECK(rl.level == Approx(4.600149226776580).epsilon(1e-13));
  CHECK(rl.ci_low == rl.level);
  CHECK(rl.ci_high == rl.level);
  CHECK_THROWS_AS(return_level(exact, 1.0), DomainError);

  const auto x = gev_sample(GevParams{20, 5, 0.1}, 200, 4);
  const GevFit fit = fit_gev_mle(x);
  REQUIRE(fit.converged);
  double prev = -1e300;
  for (double t : {1.5, 2.0, 5.0, 10.0, 30.0, 50.0, 100.0, 500.0}) {
    const auto r = return_level(fit, t);
    CHECK(r.level > prev);
    CHECK(r.ci_low <= r.level);
    CHECK(r.level <= r.ci_high);
    prev = r.level;
  }
  CHECK(return_level(fit, 100).level > return_level(fit, 30).level);
  // Wider interval at higher confidence.
  CHECK(return_level(fit, 100, 0.99).width() > return_level(fit, 100, 0.9).width());
}

TEST_CASE("analytic return-level gradient matches finite differences") {
  for (double xi : {-0.3, -0.05, -1e-6, 0.0, 1e-6, 0.1, 0.35}) {
    for (double t : {2.0, 30.0, 100.0}) {
      const GevParams p{20, 5, xi};
      const Eigen::Vector3d g = return_level_gradient(p, t);
      const double prob = 1.0 - 1.0 / t;
      Eigen::Vector3d fd;
      for (int i = 0; i < 3; ++i) {
        const double h = 1e-6;
        Eigen::Vector3d up = p.as_vector();
        Eigen::Vector3d dn = p.as_vector();
        up(i) += h;
        dn(i) -= h;
        // Straddling the Gumbel switch is fine: both branches are continuous.
        fd(i) = (gev_quantile(prob, GevParams::from_vector(up)) -
                 gev_quantile(prob, GevParams::from_vector(dn))) /
                (2 * h);
      }
      for (int i = 0; i < 3; ++i) {
        CHECK(g(i) == Approx(fd(i)).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("ks_test statistic and p-value") {
  const GevParams p{0, 1, 0};
  const double median = gev_quantile(0.5, p);
  const auto one = ks_test(std::vector<double>{median}, p);
  CHECK(one.statistic == Approx(0.5).epsilon(1e-12));

  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(gev_quantile((i - 0.5) / 100.0, GevParams{20, 5, 0.1}));
  const auto r = ks_test(grid, GevParams{20, 5, 0.1});
  CHECK(r.statistic == Approx(0.005).epsilon(1e-9));
  CHECK(r.pass);
  CHECK(r.pass == (r.p_value > r.alpha));
  CHECK_THROWS_AS(ks_test(std::vector<double>{}, p), DomainError);

  // scipy.stats.kstwobign.sf
  CHECK(kolmogorov_sf(0.5) == Approx(9.63945244e-01).epsilon(1e-8));
  CHECK(kolmogorov_sf(1.0) == Approx(2.69999672e-01).epsilon(1e-8));
  CHECK(kolmogorov_sf(1.2) == Approx(1.12249667e-01).epsilon(1e-8));
  CHECK(kolmogorov_sf(2.0) == Approx(6.70925256e-04).epsilon(1e-6));
}

TEST_CASE("ks_test size with fully specified parameters") {
  const GevParams p{20, 5, 0.1};
  int rejected = 0;
  for (std::uint64_t rep = 0; rep < 1000; ++rep) {
    const auto x = gev_sample(p, 96, hash64(1234, rep));
    if (!ks_test(x, p).pass) ++rejected;
  }
  CHECK(rejected / 1000.0 <= 0.07);
}
