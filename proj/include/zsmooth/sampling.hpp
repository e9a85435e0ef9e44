#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "zsmooth/distributions.hpp"

namespace zsmooth {

enum class SamplingKind { MC, QMCCartesian, RQMCCartesian, QMCLatin, RQMCLatin };

struct Strategy {
  SamplingKind kind = SamplingKind::MC;
  bool antithetic = false;

  bool cartesian() const noexcept {
    return kind == SamplingKind::QMCCartesian || kind == SamplingKind::RQMCCartesian;
  }
  bool latin() const noexcept {
    return kind == SamplingKind::QMCLatin || kind == SamplingKind::RQMCLatin;
  }
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

std::string_view to_string(SamplingKind kind) noexcept;
std::optional<SamplingKind> parse_sampling(std::string_view name);
std::string sampling_names();

// Unit points clamped to [kUnitClamp, 1 - kUnitClamp] before the inverse CDF.
inline constexpr double kUnitClamp = 1e-12;

// An s x n block of perturbations. Rows are samples, columns dimensions.
struct SamplePlan {
  Eigen::MatrixXd unit_points;  // strictly inside (0, 1)
  Eigen::MatrixXd eps;          // empty until transform()
  Strategy strategy;
  std::uint64_t seed = 0;
  // For antithetic plans rows 2i and 2i+1 mirror each other; pairing[i] is
  // the partner row. Empty otherwise.
  std::vector<std::size_t> pairing;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(unit_points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(unit_points.cols()); }
  bool transformed() const noexcept { return eps.size() > 0 || unit_points.size() == 0; }
};

// Integer k with k^n == s, if one exists.
std::optional<std::size_t> exact_root(std::size_t s, std::size_t n);

// Throws Error(CartesianSampleCount | AntitheticOddCount | InvalidArgument)
// if (strategy, s, n) cannot form a plan.
void validate_plan_request(const Strategy& strategy, std::size_t s, std::size_t n);
// Additionally rejects antithetic sampling with a skewed distribution.
void validate_plan_request(const Strategy& strategy, std::size_t s, std::size_t n,
                           const Distribution& d);

// Unit points only. QMC plans are fixed given (s, n) up to the Latin
// permutation, which is drawn from `seed`; MC and RQMC depend on the seed.
SamplePlan make_plan(const Strategy& strategy, std::size_t s, std::size_t n,
                     std::uint64_t seed);

// Fills eps with the inverse CDF of the clamped unit points. Antithetic
// partners of a symmetric distribution are stored as exact negations.
SamplePlan transform(SamplePlan plan, const Distribution& d);

// make_plan followed by transform.
SamplePlan make_plan(const Strategy& strategy, std::size_t s, std::size_t n,
                     std::uint64_t seed, const Distribution& d);

}  // namespace zsmooth
