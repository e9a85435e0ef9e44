#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "zsmooth/distributions.hpp"
#include "zsmooth/sampling.hpp"
#include "zsmooth/tensor.hpp"

namespace zsmooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// The function under relaxation, f: R^n -> R^m. `eval` must be deterministic
// and safe to call concurrently.
struct BlackBox {
  std::size_t n = 0;
  std::size_t m = 0;
  std::function<Vector(const Vector&)> eval;
  std::string name;

  Vector operator()(const Vector& x) const { return eval(x); }
};

enum class Covariate { None, FAtX, LOO };

std::string_view to_string(Covariate c) noexcept;
// "none", "fx", "loo"
std::optional<Covariate> parse_covariate(std::string_view name);

// Either an isotropic scale gamma > 0 or a lower-triangular matrix L with a
// strictly positive diagonal. Perturbed inputs are x + gamma*eps or x + L*eps.
class Scale {
 public:
  static Scale scalar(double gamma);
  static Scale matrix(Matrix lower);

  bool is_scalar() const noexcept { return std::holds_alternative<double>(value_); }
  double gamma() const;                 // requires is_scalar()
  const Matrix& lower() const;          // requires !is_scalar()
  Matrix as_matrix(std::size_t n) const;

  Vector apply(const Vector& eps) const;
  // L^{-1} v by forward substitution (v / gamma for scalars).
  Vector solve(const Vector& v) const;
  // L^{-T} M by back substitution.
  Matrix solve_transpose(const Matrix& m) const;

  Scale scaled(double factor) const;

 private:
  explicit Scale(std::variant<double, Matrix> v) : value_(std::move(v)) {}
  std::variant<double, Matrix> value_;
};

struct SmoothingConfig {
  Distribution distribution{DistributionKind::Gaussian};
  Scale scale = Scale::scalar(1.0);
  std::size_t samples = 1024;
  Strategy strategy{};
  Covariate covariate = Covariate::None;
};

// Plan for `cfg` in dimension n, already transformed by cfg.distribution.
SamplePlan make_plan(const SmoothingConfig& cfg, std::size_t n, std::uint64_t seed);

struct OutputCovariance {
  Matrix cov;    // m x m
  Tensor d_dx;   // m x m x n
  Tensor d_dL;   // m x m x n x n
};

struct MedianEstimate {
  double value = 0.0;
  Vector gradient;
  std::size_t k = 0;
};

struct EstimateReport {
  Vector value;                   // m
  Matrix jacobian;                // m x n
  std::optional<Vector> dgamma;   // m, scalar scale only
  std::optional<Tensor> dL;       // m x n x n, matrix scale only
  std::optional<OutputCovariance> output_cov;
  std::optional<MedianEstimate> median;
  std::size_t samples_used = 0;
  std::uint64_t seed = 0;
};

// Evaluates f once per plan row at x + scale*eps and exposes every
// estimator as a linear functional of that single batch.
//
// Residuals use the configured covariate baseline c_i:
//   None  -> 0
//   FAtX  -> f(x), one extra evaluation
//   LOO   -> mean of the other s-1 outputs
// Samples whose eps lies in the distribution's undefined-gradient set
// contribute nothing to any gradient.
//
// Sums are pairwise in plan order, so results are identical for any
// evaluation thread count.
class SmoothingEstimator {
 public:
  SmoothingEstimator(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
                     const Vector& x, unsigned threads = 1);

  Vector value() const;
  Matrix jacobian() const;
  // d f_{gamma eps} / d gamma. Scalar scale only.
  Vector dgamma() const;
  // d f_{L eps} / d L as m x n x n. A scalar scale is treated as gamma*I.
  Tensor dL() const;
  OutputCovariance output_cov() const;
  MedianEstimate median(std::size_t k) const;

  EstimateReport report(bool with_cov = false,
                        std::optional<std::size_t> median_k = std::nullopt) const;

  const Matrix& outputs() const noexcept { return outputs_; }
  std::size_t samples_used() const noexcept;

 private:
  Vector mean_rows(const Matrix& rows) const;
  Matrix score_weighted(const Matrix& residuals) const;
  Tensor scale_weighted(const Matrix& residuals) const;
  Matrix scale_weight(std::size_t i) const;

  SmoothingConfig cfg_;
  SamplePlan plan_;
  Vector x_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  Matrix outputs_;                // s x m
  std::optional<Vector> f_at_x_;  // FAtX only
  Matrix residuals_;              // s x m
  Matrix x_weights_;              // s x n, zero rows on the undefined set
  std::vector<bool> defined_;     // per sample
};

Vector smooth_value(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
                    const Vector& x);
Matrix jacobian(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
                const Vector& x);
Vector dgamma(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
              const Vector& x);
Tensor dL(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
          const Vector& x);
OutputCovariance output_cov(const BlackBox& f, const SmoothingConfig& cfg,
                            const SamplePlan& plan, const Vector& x);

// Probability q_i that values[i] is the median of a uniformly random
// k-subset. Aligned with the input order; ties share their mass equally.
std::vector<double> median_weights(std::span<const double> values, std::size_t k);

// k-sample-median value and gradient for scalar f.
MedianEstimate median_gradient(const BlackBox& f, const SmoothingConfig& cfg,
                               const SamplePlan& plan, const Vector& x, std::size_t k);

// x -> loss(h(x)), for smoothing the objective rather than the algorithm.
BlackBox compose_objective(const BlackBox& h, std::function<double(const Vector&)> loss,
                           std::string name = {});

}  // namespace zsmooth
