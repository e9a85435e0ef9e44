#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "zsmooth/estimators.hpp"

namespace zsmooth {

enum class Fixture { Heaviside, Staircase, Linear, Constant };

struct FixtureParams {
  double step = 1.0;      // Staircase
  double constant = 0.0;  // Constant
};

struct AnalyticResult {
  // Empty when E[f(x + gamma eps)] does not exist (unbounded f under Cauchy
  // noise); the gradient is still finite there.
  std::optional<double> value;
  Vector gradient;
};

// Closed-form smoothed value and gradient under isotropic scale gamma.
//   Heaviside(x) = 1[x_0 >= 0]   ->  (S(-x_0/gamma), mu(-x_0/gamma)/gamma e_0)
//   Linear(x)    = sum_i x_i     ->  value shifted by gamma * E[eps] per input
//   Constant(x)  = c             ->  (c, 0)
//   Staircase(x) = floor(x/h)*h  ->  sum of shifted Heavisides (n = 1 only)
// S is the survival function.
AnalyticResult analytic_oracle(Fixture fixture, const Distribution& d, const Vector& x,
                               double gamma, const FixtureParams& params = {});

struct OracleEstimate {
  Matrix jacobian;         // mean of the per-seed estimates
  double bootstrap_se = 0; // Frobenius norm of the bootstrap standard error
  std::size_t samples_per_seed = 0;
  std::size_t seeds = 0;
  Strategy strategy;
};

inline constexpr std::size_t kOracleSeeds = 16;

// High-budget reference Jacobian: `budget` evaluations split over 16
// independently seeded plans, each RQMC-Cartesian (largest k^n that fits,
// k >= 2) or RQMC-Latin otherwise. Each plan is centered on the mean output
// of the other 15, a leave-one-out baseline that stays unbiased under
// stratified sampling.
OracleEstimate bruteforce_oracle(const BlackBox& f, const Distribution& d, const Vector& x,
                                 const Scale& scale, std::size_t budget, std::uint64_t seed,
                                 unsigned threads = 1);

}  // namespace zsmooth
