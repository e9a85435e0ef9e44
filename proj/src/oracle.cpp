#include "zsmooth/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"
#include "zsmooth/rng.hpp"

namespace zsmooth {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
// Tail mass below which staircase terms are dropped.
constexpr double kTailCut = 1e-17;
constexpr long kMaxTerms = 10'000'000;

std::optional<double> noise_mean(const Distribution& d) {
  switch (d.kind()) {
    case DistributionKind::Cauchy: return std::nullopt;
    case DistributionKind::Gumbel: return kEulerGamma;
    default: return 0.0;
  }
}

AnalyticResult staircase_oracle(const Distribution& d, double x, double gamma, double step) {
  AnalyticResult out;
  out.gradient = Vector::Zero(1);
  if (d.kind() == DistributionKind::Cauchy) {
    // Sum over k of the Cauchy density at (k h - x) / gamma has the closed
    // form sinh(2 pi c) / (cosh(2 pi c) - cos(2 pi a)), a = x/h, c = gamma/h.
    const double a = x / step;
    const double c = gamma / step;
    out.gradient(0) = std::tanh(2.0 * std::numbers::pi * c) /
                      (1.0 - std::cos(2.0 * std::numbers::pi * a) /
                                 std::cosh(2.0 * std::numbers::pi * c));
    return out;
  }

  // floor(y) = sum_{k>=1} 1[y >= k] - sum_{k<=0} 1[y < k], with y in units of step.
  const auto t_of = [&](long k) { return (static_cast<double>(k) * step - x) / gamma; };
  const long center = static_cast<long>(std::floor(x / step));
  double value = 0.0;
  double grad = 0.0;
  for (long k = 1, it = 0;; ++k, ++it) {
    const double t = t_of(k);
    const double tail = d.survival(t);
    value += tail;
    if ((k > center && tail < kTailCut) || it > kMaxTerms) break;
  }
  for (long k = 0, it = 0;; --k, ++it) {
    const double t = t_of(k);
    const double mass = d.cdf(t);
    value -= mass;
    if ((k <= center && mass < kTailCut) || it > kMaxTerms) break;
  }
  // Density terms decay with the tails; walk outward from the center.
  for (long k = center, it = 0;; ++k, ++it) {
    const double term = d.density(t_of(k));
    grad += term;
    if ((k > center + 1 && term < kTailCut && d.survival(t_of(k)) < kTailCut) || it > kMaxTerms)
      break;
  }
  for (long k = center - 1, it = 0;; --k, ++it) {
    const double term = d.density(t_of(k));
    grad += term;
    if ((term < kTailCut && d.cdf(t_of(k)) < kTailCut) || it > kMaxTerms) break;
  }
  out.value = value * step;
  out.gradient(0) = grad * step / gamma;
  return out;
}

}  // namespace

AnalyticResult analytic_oracle(Fixture fixture, const Distribution& d, const Vector& x,
                               double gamma, const FixtureParams& params) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be > 0");
  if (x.size() == 0) throw Error(ErrorCode::InvalidArgument, "x must be non-empty");
  const auto n = x.size();
  AnalyticResult out;
  out.gradient = Vector::Zero(n);
  switch (fixture) {
    case Fixture::Heaviside: {
      const double t = -x(0) / gamma;
      out.value = d.survival(t);
      out.gradient(0) = d.density(t) / gamma;
      return out;
    }
    case Fixture::Linear: {
      const auto mean = noise_mean(d);
      if (mean) out.value = x.sum() + static_cast<double>(n) * gamma * *mean;
      out.gradient.setOnes();
      return out;
    }
    case Fixture::Constant:
      out.value = params.constant;
      return out;
    case Fixture::Staircase:
      if (n != 1) {
        throw Error(ErrorCode::UnsupportedFixturePair,
                    fmt::format("staircase oracle is one-dimensional, got n = {}", n));
      }
      if (!(params.step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be > 0");
      return staircase_oracle(d, x(0), gamma, params.step);
  }
  throw Error(ErrorCode::UnsupportedFixturePair, "unknown fixture");
}

OracleEstimate bruteforce_oracle(const BlackBox& f, const Distribution& d, const Vector& x,
                                 const Scale& scale, std::size_t budget, std::uint64_t seed,
                                 unsigned threads) {
  const std::size_t n = f.n;
  const std::size_t per_seed = budget / kOracleSeeds;
  if (per_seed < 2) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("oracle budget {} is too small for {} seeds", budget, kOracleSeeds));
  }

  // Largest k with k^n <= per_seed.
  std::size_t k = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(per_seed), 1.0 / static_cast<double>(n))));
  const auto fits = [&](std::size_t kk) {
    double p = 1.0;
    for (std::size_t i = 0; i < n; ++i) p *= static_cast<double>(kk);
    return p <= static_cast<double>(per_seed);
  };
  while (k > 1 && !fits(k)) --k;
  while (fits(k + 1)) ++k;

  SmoothingConfig cfg;
  cfg.distribution = d;
  cfg.scale = scale;
  if (k >= 2) {
    cfg.strategy = Strategy{SamplingKind::RQMCCartesian, false};
    cfg.samples = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(k),
                                                                 static_cast<double>(n))));
  } else {
    cfg.strategy = Strategy{SamplingKind::RQMCLatin, false};
    cfg.samples = per_seed;
  }

  // Per seed: the uncentered estimate mean(f w), the plan's mean weight
  // mean(w) and its mean output.
  std::vector<Matrix> raw(kOracleSeeds), weight(kOracleSeeds);
  std::vector<Vector> mean_out(kOracleSeeds);
  std::vector<std::exception_ptr> errors(kOracleSeeds);
  const BlackBox one{n, 1, [](const Vector&) { return Vector::Ones(1); }, "one"};
  const auto run = [&](std::size_t i) {
    try {
      const auto plan = make_plan(cfg, n, RngStream::derive_seed(seed, {i}));
      const SmoothingEstimator est(f, cfg, plan, x);
      raw[i] = est.jacobian();
      mean_out[i] = est.value();
      weight[i] = SmoothingEstimator(one, cfg, plan, x).jacobian();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, kOracleSeeds));
  if (workers == 1) {
    for (std::size_t i = 0; i < kOracleSeeds; ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < kOracleSeeds; i += workers) run(i);
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Leave-one-seed-out baseline: independent of the plan it centers.
  Vector total = Vector::Zero(f.m);
  for (const auto& v : mean_out) total += v;
  std::vector<Matrix> estimates(kOracleSeeds);
  for (std::size_t i = 0; i < kOracleSeeds; ++i) {
    const Vector baseline = (total - mean_out[i]) / static_cast<double>(kOracleSeeds - 1);
    estimates[i] = raw[i] - baseline * weight[i].row(0);
  }

  OracleEstimate out;
  out.jacobian = Matrix::Zero(f.m, n);
  for (const auto& e : estimates) out.jacobian += e;
  out.jacobian /= static_cast<double>(kOracleSeeds);

  // Bootstrap over the seed-level estimates.
  constexpr std::size_t kResamples = 1000;
  RngStream rng = RngStream::derive(seed, {kOracleSeeds, 0xb007});
  std::vector<Matrix> means(kResamples);
  Matrix grand = Matrix::Zero(f.m, n);
  for (auto& mean : means) {
    mean = Matrix::Zero(f.m, n);
    for (std::size_t j = 0; j < kOracleSeeds; ++j) mean += estimates[rng.below(kOracleSeeds)];
    mean /= static_cast<double>(kOracleSeeds);
    grand += mean;
  }
  grand /= static_cast<double>(kResamples);
  double var = 0.0;
  for (const auto& mean : means) var += (mean - grand).squaredNorm();
  out.bootstrap_se = std::sqrt(var / static_cast<double>(kResamples - 1));
  out.samples_per_seed = cfg.samples;
  out.seeds = kOracleSeeds;
  out.strategy = cfg.strategy;
  return out;
}

}  // namespace zsmooth
