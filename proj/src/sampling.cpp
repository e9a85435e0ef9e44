#include "zsmooth/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"
#include "zsmooth/rng.hpp"

namespace zsmooth {

namespace {

constexpr std::array<SamplingKind, 5> kAllSampling = {
    SamplingKind::MC, SamplingKind::QMCCartesian, SamplingKind::RQMCCartesian,
    SamplingKind::QMCLatin, SamplingKind::RQMCLatin};

double clamp_unit(double u) { return std::clamp(u, kUnitClamp, 1.0 - kUnitClamp); }

// k^n, or nullopt once it exceeds `limit`.
std::optional<std::size_t> bounded_power(std::size_t k, std::size_t n, std::size_t limit) {
  std::size_t p = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (k != 0 && p > limit / k) return std::nullopt;
    p *= k;
  }
  return p;
}

Eigen::MatrixXd monte_carlo(std::size_t s, std::size_t n, RngStream& rng) {
  Eigen::MatrixXd u(s, n);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < n; ++j) u(i, j) = rng.uniform();
  return u;
}

Eigen::MatrixXd cartesian(std::size_t s, std::size_t n, bool randomized, RngStream& rng) {
  const std::size_t k = *exact_root(s, n);
  const double width = 1.0 / static_cast<double>(k);
  Eigen::MatrixXd u(s, n);
  for (std::size_t i = 0; i < s; ++i) {
    std::size_t cell = i;
    // Last dimension varies fastest.
    for (std::size_t jj = n; jj-- > 0;) {
      const auto digit = static_cast<double>(cell % k);
      cell /= k;
      const double offset = randomized ? rng.uniform() : 0.5;
      u(i, jj) = (digit + offset) * width;
    }
  }
  return u;
}

Eigen::MatrixXd latin(std::size_t s, std::size_t n, bool randomized, RngStream& rng) {
  // Permutations are drawn before any jitter so QMC and RQMC plans with the
  // same seed occupy the same bins.
  std::vector<std::vector<std::size_t>> perms(n, std::vector<std::size_t>(s));
  for (auto& perm : perms) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = s; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  const double width = 1.0 / static_cast<double>(s);
  Eigen::MatrixXd u(s, n);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double offset = randomized ? rng.uniform() : 0.5;
      u(i, j) = (static_cast<double>(perms[j][i]) + offset) * width;
    }
  }
  return u;
}

}  // namespace

std::string_view to_string(SamplingKind kind) noexcept {
  switch (kind) {
    case SamplingKind::MC: return "mc";
    case SamplingKind::QMCCartesian: return "qmc-cartesian";
    case SamplingKind::RQMCCartesian: return "rqmc-cartesian";
    case SamplingKind::QMCLatin: return "qmc-latin";
    case SamplingKind::RQMCLatin: return "rqmc-latin";
  }
  return "unknown";
}

std::optional<SamplingKind> parse_sampling(std::string_view name) {
  for (SamplingKind k : kAllSampling)
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string sampling_names() {
  std::string out;
  for (SamplingKind k : kAllSampling) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

std::optional<std::size_t> exact_root(std::size_t s, std::size_t n) {
  if (n == 0 || s == 0) return std::nullopt;
  if (n == 1) return s;
  const auto guess = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(s), 1.0 / static_cast<double>(n))));
  for (std::size_t k = guess > 1 ? guess - 1 : 1; k <= guess + 1; ++k) {
    if (auto p = bounded_power(k, n, s); p && *p == s) return k;
  }
  return std::nullopt;
}

void validate_plan_request(const Strategy& strategy, std::size_t s, std::size_t n) {
  if (s == 0) throw Error(ErrorCode::InvalidArgument, "samples must be at least 1");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be at least 1");
  if (strategy.antithetic && s % 2 != 0) {
    throw Error(ErrorCode::AntitheticOddCount,
                fmt::format("antithetic sampling requires an even sample count, got {}", s));
  }
  if (strategy.cartesian()) {
    const std::size_t base = strategy.antithetic ? s / 2 : s;
    if (!exact_root(base, n)) {
      throw Error(ErrorCode::CartesianSampleCount,
                  strategy.antithetic
                      ? fmt::format("antithetic cartesian requires samples = 2*k^n (n={}), got {}",
                                    n, s)
                      : fmt::format("cartesian requires samples = k^n (n={}), got {}", n, s));
    }
  }
}

void validate_plan_request(const Strategy& strategy, std::size_t s, std::size_t n,
                           const Distribution& d) {
  validate_plan_request(strategy, s, n);
  if (strategy.antithetic && !d.symmetric()) {
    throw Error(ErrorCode::AntitheticAsymmetric,
                fmt::format("antithetic sampling requires a symmetric distribution, got {}",
                            d.name()));
  }
}

SamplePlan make_plan(const Strategy& strategy, std::size_t s, std::size_t n,
                     std::uint64_t seed) {
  validate_plan_request(strategy, s, n);
  RngStream rng(seed);
  const std::size_t base = strategy.antithetic ? s / 2 : s;

  Eigen::MatrixXd points;
  switch (strategy.kind) {
    case SamplingKind::MC: points = monte_carlo(base, n, rng); break;
    case SamplingKind::QMCCartesian: points = cartesian(base, n, false, rng); break;
    case SamplingKind::RQMCCartesian: points = cartesian(base, n, true, rng); break;
    case SamplingKind::QMCLatin: points = latin(base, n, false, rng); break;
    case SamplingKind::RQMCLatin: points = latin(base, n, true, rng); break;
  }
  points = points.unaryExpr(&clamp_unit);

  SamplePlan plan;
  plan.strategy = strategy;
  plan.seed = seed;
  if (!strategy.antithetic) {
    plan.unit_points = std::move(points);
    return plan;
  }
  plan.unit_points.resize(s, n);
  plan.pairing.resize(s);
  for (std::size_t i = 0; i < base; ++i) {
    plan.unit_points.row(2 * i) = points.row(i);
    plan.unit_points.row(2 * i + 1) = (1.0 - points.row(i).array()).matrix();
    plan.pairing[2 * i] = 2 * i + 1;
    plan.pairing[2 * i + 1] = 2 * i;
  }
  return plan;
}

SamplePlan transform(SamplePlan plan, const Distribution& d) {
  if (plan.strategy.antithetic && !d.symmetric()) {
    throw Error(ErrorCode::AntitheticAsymmetric,
                fmt::format("antithetic sampling requires a symmetric distribution, got {}",
                            d.name()));
  }
  const std::size_t s = plan.samples();
  const std::size_t n = plan.dim();
  plan.eps.resize(s, n);
  for (std::size_t i = 0; i < s; ++i) {
    const bool mirror = !plan.pairing.empty() && plan.pairing[i] < i;
    for (std::size_t j = 0; j < n; ++j) {
      plan.eps(i, j) = mirror ? -plan.eps(plan.pairing[i], j)
                              : d.inverse_cdf(clamp_unit(plan.unit_points(i, j)));
    }
  }
  return plan;
}

SamplePlan make_plan(const Strategy& strategy, std::size_t s, std::size_t n,
                     std::uint64_t seed, const Distribution& d) {
  validate_plan_request(strategy, s, n, d);
  return transform(make_plan(strategy, s, n, seed), d);
}

}  // namespace zsmooth
