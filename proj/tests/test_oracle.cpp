#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "zsmooth/errors.hpp"
#include "zsmooth/oracle.hpp"
#include "zsmooth/testbed.hpp"

using namespace zsmooth;
using K = DistributionKind;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

// Smoothed staircase by brute-force quadrature of floor(x + gamma e) mu(e).
double staircase_quadrature(const Distribution& d, double x, double gamma, double lo, double hi) {
  // Integrate piecewise between the jumps, where the integrand is constant.
  double total = 0.0;
  const double a = x + gamma * lo, b = x + gamma * hi;
  for (double k = std::floor(a); k < b; k += 1.0) {
    const double e0 = std::max(lo, (k - x) / gamma);
    const double e1 = std::min(hi, (k + 1 - x) / gamma);
    if (e1 > e0) total += k * (d.cdf(e1) - d.cdf(e0));
  }
  return total;
}

}  // namespace

TEST_CASE("analytic oracle examples") {
  {
    const auto r = analytic_oracle(Fixture::Heaviside, Distribution(K::Gaussian), vec({0}), 1.0);
    CHECK(*r.value == doctest::Approx(0.5));
    CHECK(r.gradient(0) == doctest::Approx(0.3989422804014327));
  }
  {
    const auto r = analytic_oracle(Fixture::Heaviside, Distribution(K::Laplace), vec({0}), 1.0);
    CHECK(*r.value == doctest::Approx(0.5));
    CHECK(r.gradient(0) == doctest::Approx(0.5));
  }
  {
    FixtureParams p;
    p.constant = 3.5;
    const auto r = analytic_oracle(Fixture::Constant, Distribution(K::Cauchy), vec({1, 2}), 2.0, p);
    CHECK(*r.value == 3.5);
    CHECK(r.gradient.isZero(0.0));
  }
}

TEST_CASE("heaviside oracle matches the reference normal cdf") {
  for (double x : {-1.0, 0.0, 1.0, 2.5}) {
    for (double gamma : {0.5, 1.0, 2.0}) {
      const auto r = analytic_oracle(Fixture::Heaviside, Distribution(K::Gaussian), vec({x, 7}), gamma);
      CHECK(*r.value == doctest::Approx(ref::Phi(x / gamma)).epsilon(1e-12));
      CHECK(r.gradient(0) == doctest::Approx(ref::phi(x / gamma) / gamma).epsilon(1e-12));
      CHECK(r.gradient(1) == 0.0);
    }
  }
}

TEST_CASE("heaviside oracle handles the skewed gumbel") {
  // P(x + eps >= 0) = 1 - F(-x) with F(t) = exp(-exp(-t)).
  const double x = 0.7;
  const auto r = analytic_oracle(Fixture::Heaviside, Distribution(K::Gumbel), vec({x}), 1.0);
  CHECK(*r.value == doctest::Approx(1 - std::exp(-std::exp(x))).epsilon(1e-12));
  const double h = 1e-5;
  const auto up = analytic_oracle(Fixture::Heaviside, Distribution(K::Gumbel), vec({x + h}), 1.0);
  const auto dn = analytic_oracle(Fixture::Heaviside, Distribution(K::Gumbel), vec({x - h}), 1.0);
  CHECK(r.gradient(0) == doctest::Approx((*up.value - *dn.value) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("linear oracle") {
  const auto sym = analytic_oracle(Fixture::Linear, Distribution(K::Logistic), vec({1, 2}), 3.0);
  CHECK(*sym.value == 3.0);
  CHECK(sym.gradient == Vector::Ones(2));
  const auto gum = analytic_oracle(Fixture::Linear, Distribution(K::Gumbel), vec({1}), 2.0);
  CHECK(*gum.value == doctest::Approx(1.0 + 2.0 * 0.5772156649015329));
  const auto cau = analytic_oracle(Fixture::Linear, Distribution(K::Cauchy), vec({1}), 2.0);
  CHECK_FALSE(cau.value.has_value());
  CHECK(cau.gradient(0) == 1.0);
}

TEST_CASE("staircase oracle matches quadrature and finite differences") {
  for (auto k : kAllDistributions) {
    const Distribution d(k);
    for (double x : {-1.3, 0.0, 0.25, 4.6}) {
      for (double gamma : {0.3, 1.0}) {
        const auto r = analytic_oracle(Fixture::Staircase, d, vec({x}), gamma);
        INFO(to_string(k) << " x=" << x << " gamma=" << gamma);
        CHECK(std::isfinite(r.gradient(0)));
        CHECK(r.gradient(0) >= 0.0);
        if (k == K::Cauchy) {
          CHECK_FALSE(r.value.has_value());
          continue;
        }
        const auto [lo, hi] = d.support();
        const double a = std::isinf(lo) ? -60.0 : lo, b = std::isinf(hi) ? 60.0 : hi;
        CHECK(*r.value == doctest::Approx(staircase_quadrature(d, x, gamma, a, b)).epsilon(1e-9));
        const double h = 1e-5;
        const auto up = analytic_oracle(Fixture::Staircase, d, vec({x + h}), gamma);
        const auto dn = analytic_oracle(Fixture::Staircase, d, vec({x - h}), gamma);
        CHECK(std::abs(r.gradient(0) - (*up.value - *dn.value) / (2 * h)) < 1e-4 * (1 + r.gradient(0)));
      }
    }
  }
}

TEST_CASE("cauchy staircase closed form matches a direct sum") {
  const Distribution d(K::Cauchy);
  for (double x : {0.0, 0.3, -2.75}) {
    for (double gamma : {0.2, 1.0, 5.0}) {
      double sum = 0.0;
      for (long k = -2000000; k <= 2000000; ++k) sum += d.density((k - x) / gamma) / gamma;
      const auto r = analytic_oracle(Fixture::Staircase, d, vec({x}), gamma);
      CHECK(r.gradient(0) == doctest::Approx(sum).epsilon(1e-5));
    }
  }
}

TEST_CASE("staircase oracle with a wide step") {
  FixtureParams p;
  p.step = 2.0;
  const auto r = analytic_oracle(Fixture::Staircase, Distribution(K::Gaussian), vec({11.0}), 1e-3, p);
  CHECK(*r.value == doctest::Approx(10.0));
  CHECK(std::abs(r.gradient(0)) < 1e-12);
}

TEST_CASE("oracle errors") {
  CHECK_THROWS_AS(analytic_oracle(Fixture::Staircase, Distribution(K::Gaussian), vec({1, 2}), 1.0), Error);
  try {
    analytic_oracle(Fixture::Staircase, Distribution(K::Gaussian), vec({1, 2}), 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFixturePair);
  }
  CHECK_THROWS_AS(analytic_oracle(Fixture::Heaviside, Distribution(K::Gaussian), vec({0}), 0.0), Error);
}

TEST_CASE("bruteforce oracle agrees with the analytic oracle") {
  for (auto k : kAllDistributions) {
    const Distribution d(k);
    for (double x : {-0.5, 0.0, 0.8}) {
      const auto est = bruteforce_oracle(heaviside_box(1), d, vec({x}), Scale::scalar(1.0), 1 << 16, 3);
      const auto exact = analytic_oracle(Fixture::Heaviside, d, vec({x}), 1.0);
      INFO(to_string(k) << " x=" << x << " se=" << est.bootstrap_se);
      CHECK(est.seeds == kOracleSeeds);
      CHECK(est.strategy.kind == SamplingKind::RQMCCartesian);
      CHECK(est.samples_per_seed == 4096);
      CHECK(std::abs(est.jacobian(0, 0) - exact.gradient(0)) <= 3 * est.bootstrap_se + 1e-12);
    }
  }
}

TEST_CASE("bruteforce oracle for a two-element sort") {
  // P_00 = 1[x_0 <= x_1]; smoothed value Phi((x_1 - x_0) / (gamma sqrt 2)).
  const Vector x = vec({0.1, -0.1});
  const auto est = bruteforce_oracle(argsort_box(2), Distribution(K::Gaussian), x, Scale::scalar(1.0),
                                     1 << 18, 5, 2);
  const double z = (x(1) - x(0)) / std::numbers::sqrt2;
  const double slope = ref::phi(z) / std::numbers::sqrt2;
  CHECK(est.jacobian(0, 0) == doctest::Approx(-slope).epsilon(0.01));
  CHECK(est.jacobian(0, 1) == doctest::Approx(slope).epsilon(0.01));
  // Each row and column of P sums to one, so the gradients of those sums vanish.
  for (int r = 0; r < 2; ++r) {
    CHECK(std::abs(est.jacobian(2 * r, 0) + est.jacobian(2 * r + 1, 0)) < 1e-12);
  }
  CHECK(std::abs(est.jacobian(0, 0) + est.jacobian(2, 0)) < 1e-12);
}

TEST_CASE("argsort oracle gradient of each row sum vanishes") {
  const Vector x = vec({0.3, -0.2, 0.5});
  const auto est = bruteforce_oracle(argsort_box(3), Distribution(K::Logistic), x, Scale::scalar(1.0),
                                     1 << 16, 9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double row_sum = 0.0;
      for (int j = 0; j < 3; ++j) row_sum += est.jacobian(3 * r + j, c);
      CHECK(std::abs(row_sum) < 1e-12);
    }
  }
  CHECK(est.strategy.kind == SamplingKind::RQMCCartesian);
  CHECK(est.samples_per_seed == 16 * 16 * 16);
}

TEST_CASE("bootstrap se shrinks with budget") {
  const Vector x = vec({0.3, -0.2, 0.5, 0.1, 0.0});
  // 20 samples per seed is below 2^5, so the plans are Latin.
  const auto small = bruteforce_oracle(argsort_box(5), Distribution(K::Gaussian), x, Scale::scalar(1.0),
                                       16 * 20, 1);
  const auto large = bruteforce_oracle(argsort_box(5), Distribution(K::Gaussian), x, Scale::scalar(1.0),
                                       16 * 320, 1);
  CHECK(small.strategy.kind == SamplingKind::RQMCLatin);
  CHECK(small.samples_per_seed == 20);
  CHECK(large.strategy.kind == SamplingKind::RQMCCartesian);
  CHECK(large.samples_per_seed == 243);
  CHECK(large.bootstrap_se < small.bootstrap_se);
  // 16x budget shrinks the error at least as fast as 1/sqrt(s), with slack.
  CHECK(large.bootstrap_se < 0.5 * small.bootstrap_se);
}

TEST_CASE("bruteforce oracle is deterministic and thread independent") {
  const Vector x = vec({0.3, -0.2, 0.5});
  const auto a = bruteforce_oracle(argsort_box(3), Distribution(K::Gaussian), x, Scale::scalar(1.0), 1 << 14, 4, 1);
  const auto b = bruteforce_oracle(argsort_box(3), Distribution(K::Gaussian), x, Scale::scalar(1.0), 1 << 14, 4, 3);
  CHECK(a.jacobian == b.jacobian);
  CHECK(a.bootstrap_se == b.bootstrap_se);
  CHECK_THROWS_AS(bruteforce_oracle(argsort_box(3), Distribution(K::Gaussian), x, Scale::scalar(1.0), 20, 4), Error);
}
