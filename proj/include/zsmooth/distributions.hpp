#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "zsmooth/rng.hpp"

namespace zsmooth {

enum class DistributionKind { Gaussian, Logistic, Gumbel, Cauchy, Laplace, Triangular };

inline constexpr std::array<DistributionKind, 6> kAllDistributions = {
    DistributionKind::Gaussian, DistributionKind::Logistic, DistributionKind::Gumbel,
    DistributionKind::Cauchy,   DistributionKind::Laplace,  DistributionKind::Triangular};

// A standardized (zero location, unit scale) univariate smoothing density.
// Multivariate noise is the product of independent copies; location and scale
// are applied by the caller as x + gamma * eps or x + L * eps.
//
// Immutable and trivially copyable, so it can be shared freely across threads.
class Distribution {
 public:
  constexpr explicit Distribution(DistributionKind kind) noexcept : kind_(kind) {}

  constexpr DistributionKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  // True for densities with mu(e) == mu(-e); only Gumbel is skewed.
  constexpr bool symmetric() const noexcept { return kind_ != DistributionKind::Gumbel; }

  // Closed support interval; +-inf for the full real line.
  std::pair<double, double> support() const noexcept;

  double density(double e) const noexcept;
  // log mu(e); -inf outside the support.
  double log_density(double e) const noexcept;

  // -d/de log mu(e). Empty exactly on the undefined-gradient set.
  std::optional<double> score(double e) const noexcept;

  // Membership in the set where the density has no derivative
  // (Laplace: {0}; Triangular: {-1, 0, 1} and everything outside (-1, 1)).
  // Exact floating-point comparison: the set has measure zero.
  bool in_undefined_set(double e) const noexcept;

  double cdf(double e) const noexcept;
  // 1 - cdf(e), computed without cancellation in the right tail.
  double survival(double e) const noexcept;

  // Quantile function. Throws Error(DomainError) unless 0 < u < 1.
  double inverse_cdf(double u) const;

  // One draw via inverse_cdf of a uniform, so MC and QMC share the transform.
  double sample(RngStream& rng) const { return inverse_cdf(rng.uniform()); }

  friend constexpr bool operator==(Distribution a, Distribution b) noexcept {
    return a.kind_ == b.kind_;
  }

 private:
  DistributionKind kind_;
};

std::string_view to_string(DistributionKind kind) noexcept;
std::optional<DistributionKind> parse_distribution(std::string_view name);
// "gaussian, logistic, ..." for diagnostics.
std::string distribution_names();

// Standard normal helpers shared by the Gaussian distribution and the oracles.
double normal_pdf(double x) noexcept;
double normal_cdf(double x) noexcept;
double normal_quantile(double u);

}  // namespace zsmooth
