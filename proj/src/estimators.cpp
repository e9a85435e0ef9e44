#include "zsmooth/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"
#include "zsmooth/summation.hpp"

namespace zsmooth {

using detail::pairwise_sum;

std::string_view to_string(Covariate c) noexcept {
  switch (c) {
    case Covariate::None: return "none";
    case Covariate::FAtX: return "fx";
    case Covariate::LOO: return "loo";
  }
  return "unknown";
}

std::optional<Covariate> parse_covariate(std::string_view name) {
  for (Covariate c : {Covariate::None, Covariate::FAtX, Covariate::LOO})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scale

Scale Scale::scalar(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("scale gamma must be finite and > 0, got {}", gamma));
  }
  return Scale(gamma);
}

Scale Scale::matrix(Matrix lower) {
  if (lower.rows() != lower.cols() || lower.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "scale matrix must be square and non-empty");
  }
  if (!lower.allFinite()) throw Error(ErrorCode::InvalidArgument, "scale matrix is not finite");
  for (Eigen::Index r = 0; r < lower.rows(); ++r) {
    for (Eigen::Index c = r + 1; c < lower.cols(); ++c) {
      if (lower(r, c) != 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("scale matrix must be lower-triangular; entry ({},{}) = {}", r,
                                c, lower(r, c)));
      }
    }
    if (!(lower(r, r) > 0.0)) {
      throw Error(ErrorCode::SingularScaleMatrix,
                  fmt::format("scale matrix needs a positive diagonal; L({0},{0}) = {1}", r,
                              lower(r, r)));
    }
  }
  return Scale(std::move(lower));
}

double Scale::gamma() const {
  if (!is_scalar()) throw Error(ErrorCode::MatrixScaleNotAllowed, "scale is a matrix");
  return std::get<double>(value_);
}

const Matrix& Scale::lower() const {
  if (is_scalar()) throw Error(ErrorCode::InvalidArgument, "scale is a scalar");
  return std::get<Matrix>(value_);
}

Matrix Scale::as_matrix(std::size_t n) const {
  if (is_scalar()) return gamma() * Matrix::Identity(n, n);
  return lower();
}

Vector Scale::apply(const Vector& eps) const {
  if (is_scalar()) return gamma() * eps;
  return lower().triangularView<Eigen::Lower>() * eps;
}

Vector Scale::solve(const Vector& v) const {
  if (is_scalar()) return v / gamma();
  return lower().triangularView<Eigen::Lower>().solve(v);
}

Matrix Scale::solve_transpose(const Matrix& m) const {
  if (is_scalar()) return m / gamma();
  return lower().transpose().triangularView<Eigen::Upper>().solve(m);
}

Scale Scale::scaled(double factor) const {
  if (is_scalar()) return scalar(gamma() * factor);
  return matrix(lower() * factor);
}

SamplePlan make_plan(const SmoothingConfig& cfg, std::size_t n, std::uint64_t seed) {
  return make_plan(cfg.strategy, cfg.samples, n, seed, cfg.distribution);
}

// ---------------------------------------------------------------------------
// SmoothingEstimator

namespace {

void check_output(const Vector& y, std::size_t m, std::size_t index, std::size_t s) {
  if (static_cast<std::size_t>(y.size()) != m) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("black box returned {} outputs, expected {}", y.size(), m));
  }
  if (!y.allFinite()) {
    throw NonFiniteOutputError(
        index, index == s ? std::string("non-finite output of f at the unperturbed point x")
                          : fmt::format("non-finite output of f at sample {}", index));
  }
}

}  // namespace

SmoothingEstimator::SmoothingEstimator(const BlackBox& f, const SmoothingConfig& cfg,
                                       const SamplePlan& plan, const Vector& x,
                                       unsigned threads)
    : cfg_(cfg), plan_(plan), x_(x), n_(f.n), m_(f.m) {
  if (!f.eval) throw Error(ErrorCode::InvalidArgument, "black box has no evaluator");
  if (static_cast<std::size_t>(x.size()) != n_) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("x has dimension {}, black box expects {}", x.size(), n_));
  }
  if (plan_.dim() != n_) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("plan dimension {} does not match n = {}", plan_.dim(), n_));
  }
  if (!cfg_.scale.is_scalar() && static_cast<std::size_t>(cfg_.scale.lower().rows()) != n_) {
    throw Error(ErrorCode::InvalidArgument, "scale matrix size does not match n");
  }
  const std::size_t s = plan_.samples();
  if (s == 0) throw Error(ErrorCode::InvalidArgument, "plan has no samples");
  if (cfg_.covariate == Covariate::LOO && s < 2) {
    throw Error(ErrorCode::CovariateNeedsTwoSamples,
                "leave-one-out covariate needs at least 2 samples");
  }
  if (!plan_.transformed()) plan_ = transform(std::move(plan_), cfg_.distribution);

  // Evaluate f on every perturbed input.
  outputs_.resize(s, m_);
  auto eval_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector eps = plan_.eps.row(i).transpose();
      const Vector y = f.eval(x_ + cfg_.scale.apply(eps));
      check_output(y, m_, i, s);
      outputs_.row(i) = y.transpose();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(s)));
  if (workers == 1) {
    eval_range(0, s);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (s + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = std::min(s, w * chunk);
        const std::size_t e = std::min(s, b + chunk);
        pool.emplace_back([&, w, b, e] {
          try {
            eval_range(b, e);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  // Covariate baselines.
  residuals_ = outputs_;
  switch (cfg_.covariate) {
    case Covariate::None: break;
    case Covariate::FAtX: {
      Vector fx = f.eval(x_);
      check_output(fx, m_, s, s);
      residuals_.rowwise() -= fx.transpose();
      f_at_x_ = std::move(fx);
      break;
    }
    case Covariate::LOO: {
      Eigen::ArrayXd total(m_);
      pairwise_sum(0, s, total, [&](std::size_t i, Eigen::ArrayXd& acc) {
        acc += outputs_.row(i).transpose().array();
      });
      const double denom = static_cast<double>(s - 1);
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t o = 0; o < m_; ++o) {
          residuals_(i, o) = outputs_(i, o) - (total(o) - outputs_(i, o)) / denom;
        }
      }
      break;
    }
  }

  // Score weights for the x-gradient: L^{-1} score(eps_i), zeroed on the
  // undefined-gradient set.
  defined_.assign(s, true);
  x_weights_ = Matrix::Zero(s, n_);
  Vector sc(n_);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const auto v = cfg_.distribution.score(plan_.eps(i, j));
      if (!v) {
        defined_[i] = false;
        break;
      }
      sc(j) = *v;
    }
    if (defined_[i]) x_weights_.row(i) = cfg_.scale.solve(sc).transpose();
  }
}

std::size_t SmoothingEstimator::samples_used() const noexcept {
  return plan_.samples() + (f_at_x_ ? 1 : 0);
}

Vector SmoothingEstimator::mean_rows(const Matrix& rows) const {
  const std::size_t s = plan_.samples();
  Eigen::ArrayXd acc(rows.cols());
  pairwise_sum(0, s, acc, [&](std::size_t i, Eigen::ArrayXd& out) {
    out += rows.row(i).transpose().array();
  });
  return acc.matrix() / static_cast<double>(s);
}

Matrix SmoothingEstimator::score_weighted(const Matrix& residuals) const {
  const std::size_t s = plan_.samples();
  const std::size_t m = static_cast<std::size_t>(residuals.cols());
  Eigen::ArrayXd acc(m * n_);
  pairwise_sum(0, s, acc, [&](std::size_t i, Eigen::ArrayXd& out) {
    if (!defined_[i]) return;
    for (std::size_t o = 0; o < m; ++o) {
      const double r = residuals(i, o);
      if (r == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) out(o * n_ + j) += r * x_weights_(i, j);
    }
  });
  Matrix jac(m, n_);
  for (std::size_t o = 0; o < m; ++o)
    for (std::size_t j = 0; j < n_; ++j) jac(o, j) = acc(o * n_ + j) / static_cast<double>(s);
  return jac;
}

// L^{-T} (-I + score eps^T) for sample i; zero on the undefined set.
Matrix SmoothingEstimator::scale_weight(std::size_t i) const {
  if (!defined_[i]) return Matrix::Zero(n_, n_);
  Vector sc(n_);
  for (std::size_t j = 0; j < n_; ++j) sc(j) = *cfg_.distribution.score(plan_.eps(i, j));
  Matrix inner = sc * plan_.eps.row(i);
  inner.diagonal().array() -= 1.0;
  return cfg_.scale.solve_transpose(inner);
}

Tensor SmoothingEstimator::scale_weighted(const Matrix& residuals) const {
  const std::size_t s = plan_.samples();
  const std::size_t m = static_cast<std::size_t>(residuals.cols());
  const std::size_t nn = n_ * n_;
  Eigen::ArrayXd acc(m * nn);
  pairwise_sum(0, s, acc, [&](std::size_t i, Eigen::ArrayXd& out) {
    if (!defined_[i]) return;
    bool any = false;
    for (std::size_t o = 0; o < m && !any; ++o) any = residuals(i, o) != 0.0;
    if (!any) return;
    const Matrix w = scale_weight(i);
    for (std::size_t o = 0; o < m; ++o) {
      const double r = residuals(i, o);
      if (r == 0.0) continue;
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b) out(o * nn + a * n_ + b) += r * w(a, b);
    }
  });
  Tensor t({m, n_, n_});
  for (std::size_t k = 0; k < m * nn; ++k) t.data()[k] = acc(k) / static_cast<double>(s);
  return t;
}

Vector SmoothingEstimator::value() const { return mean_rows(outputs_); }

Matrix SmoothingEstimator::jacobian() const { return score_weighted(residuals_); }

Vector SmoothingEstimator::dgamma() const {
  if (!cfg_.scale.is_scalar()) {
    throw Error(ErrorCode::MatrixScaleNotAllowed,
                "dgamma needs a scalar scale; use dL for a scale matrix");
  }
  const double gamma = cfg_.scale.gamma();
  const std::size_t s = plan_.samples();
  const double n = static_cast<double>(n_);
  Eigen::ArrayXd acc(m_);
  pairwise_sum(0, s, acc, [&](std::size_t i, Eigen::ArrayXd& out) {
    if (!defined_[i]) return;
    // x_weights = score / gamma, so score.eps / gamma is their dot with eps.
    const double w = x_weights_.row(i).dot(plan_.eps.row(i)) - n / gamma;
    out += residuals_.row(i).transpose().array() * w;
  });
  return acc.matrix() / static_cast<double>(s);
}

Tensor SmoothingEstimator::dL() const { return scale_weighted(residuals_); }

OutputCovariance SmoothingEstimator::output_cov() const {
  // Covariance is shift invariant, so a constant centering c leaves the
  // expectation untouched: f(x) for FAtX, the sample mean otherwise for LOO.
  const std::size_t s = plan_.samples();
  Matrix g = outputs_;
  if (cfg_.covariate == Covariate::FAtX) {
    g.rowwise() -= f_at_x_->transpose();
  } else if (cfg_.covariate == Covariate::LOO) {
    const Vector mean = mean_rows(outputs_);
    g.rowwise() -= mean.transpose();
  }

  const std::size_t m = m_;
  const std::size_t n = n_;
  // Products g_i g_j for each sample, flattened to s x m^2.
  Matrix prod(s, m * m);
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) prod(r, i * m + j) = g(r, i) * g(r, j);

  const Vector g_mean = mean_rows(g);
  const Vector second = mean_rows(prod);
  const Matrix jac_g = score_weighted(g);
  const Matrix jac_prod = score_weighted(prod);
  const Tensor dl_g = scale_weighted(g);
  const Tensor dl_prod = scale_weighted(prod);

  OutputCovariance out{Matrix(m, m), Tensor({m, m, n}), Tensor({m, m, n, n})};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out.cov(i, j) = second(i * m + j) - g_mean(i) * g_mean(j);
      for (std::size_t a = 0; a < n; ++a) {
        out.d_dx(i, j, a) =
            jac_prod(i * m + j, a) - g_mean(i) * jac_g(j, a) - g_mean(j) * jac_g(i, a);
        for (std::size_t b = 0; b < n; ++b) {
          out.d_dL(i, j, a, b) = dl_prod(i * m + j, a, b) - g_mean(i) * dl_g(j, a, b) -
                                 g_mean(j) * dl_g(i, a, b);
        }
      }
    }
  }
  return out;
}

MedianEstimate SmoothingEstimator::median(std::size_t k) const {
  if (m_ != 1) {
    throw Error(ErrorCode::VectorOutputUnsupported,
                fmt::format("k-sample median needs a scalar black box, got m = {}", m_));
  }
  const std::size_t s = plan_.samples();
  const auto col = outputs_.col(0);
  const std::vector<double> values(col.data(), col.data() + s);
  const std::vector<double> q = median_weights(values, k);

  Eigen::ArrayXd acc(1 + n_);
  pairwise_sum(0, s, acc, [&](std::size_t i, Eigen::ArrayXd& out) {
    const double qf = q[i] * values[i];
    out(0) += qf;
    if (!defined_[i]) return;
    for (std::size_t j = 0; j < n_; ++j) out(1 + j) += qf * x_weights_(i, j);
  });
  return MedianEstimate{acc(0), acc.tail(n_).matrix(), k};
}

EstimateReport SmoothingEstimator::report(bool with_cov,
                                          std::optional<std::size_t> median_k) const {
  EstimateReport r;
  r.value = value();
  r.jacobian = jacobian();
  if (cfg_.scale.is_scalar()) {
    r.dgamma = dgamma();
  } else {
    r.dL = dL();
  }
  if (with_cov) r.output_cov = output_cov();
  if (median_k) r.median = median(*median_k);
  r.samples_used = samples_used();
  r.seed = plan_.seed;
  return r;
}

// ---------------------------------------------------------------------------
// Free functions

Vector smooth_value(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
                    const Vector& x) {
  SmoothingConfig plain = cfg;
  plain.covariate = Covariate::None;
  return SmoothingEstimator(f, plain, plan, x).value();
}

Matrix jacobian(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
                const Vector& x) {
  return SmoothingEstimator(f, cfg, plan, x).jacobian();
}

Vector dgamma(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
              const Vector& x) {
  if (!cfg.scale.is_scalar()) {
    throw Error(ErrorCode::MatrixScaleNotAllowed,
                "dgamma needs a scalar scale; use dL for a scale matrix");
  }
  return SmoothingEstimator(f, cfg, plan, x).dgamma();
}

Tensor dL(const BlackBox& f, const SmoothingConfig& cfg, const SamplePlan& plan,
          const Vector& x) {
  return SmoothingEstimator(f, cfg, plan, x).dL();
}

OutputCovariance output_cov(const BlackBox& f, const SmoothingConfig& cfg,
                            const SamplePlan& plan, const Vector& x) {
  return SmoothingEstimator(f, cfg, plan, x).output_cov();
}

namespace {

// C(a, b) as a double by the multiplicative formula; exact for the small
// arguments used in tests and accurate to rounding otherwise.
double binomial(std::size_t a, std::size_t b) {
  if (b > a) return 0.0;
  double c = 1.0;
  for (std::size_t t = 1; t <= b; ++t) {
    c = c * static_cast<double>(a - b + t) / static_cast<double>(t);
  }
  return c;
}

double log_binomial(std::size_t a, std::size_t b) {
  return std::lgamma(static_cast<double>(a) + 1.0) - std::lgamma(static_cast<double>(b) + 1.0) -
         std::lgamma(static_cast<double>(a - b) + 1.0);
}

}  // namespace

namespace {

void validate_median_k(std::size_t s, std::size_t k) {
  if (k % 2 == 0) {
    throw Error(ErrorCode::EvenKUnsupported,
                fmt::format("k-sample median needs odd k, got {}", k));
  }
  if (k < 3) throw Error(ErrorCode::InvalidArgument, "k-sample median needs k > 1");
  if (k > s) {
    throw Error(ErrorCode::KExceedsS, fmt::format("k = {} exceeds sample count {}", k, s));
  }
}

}  // namespace

std::vector<double> median_weights(std::span<const double> values, std::size_t k) {
  const std::size_t s = values.size();
  validate_median_k(s, k);
  const std::size_t half = (k - 1) / 2;

  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Weight of sorted position r (0-based): C(r, h) C(s-1-r, h) / C(s, k).
  std::vector<double> by_rank(s, 0.0);
  const bool small = half <= 16;
  const double total = small ? binomial(s, k) : 0.0;
  const double log_total = small ? 0.0 : log_binomial(s, k);
  for (std::size_t r = half; r + half < s; ++r) {
    by_rank[r] = small ? binomial(r, half) * binomial(s - 1 - r, half) / total
                       : std::exp(log_binomial(r, half) + log_binomial(s - 1 - r, half) -
                                  log_total);
  }

  // Tied values split their combined mass evenly.
  std::vector<double> q(s, 0.0);
  for (std::size_t a = 0; a < s;) {
    std::size_t b = a + 1;
    while (b < s && values[order[b]] == values[order[a]]) ++b;
    double mass = 0.0;
    for (std::size_t r = a; r < b; ++r) mass += by_rank[r];
    const double share = b - a == 1 ? by_rank[a] : mass / static_cast<double>(b - a);
    for (std::size_t r = a; r < b; ++r) q[order[r]] = share;
    a = b;
  }
  return q;
}

MedianEstimate median_gradient(const BlackBox& f, const SmoothingConfig& cfg,
                               const SamplePlan& plan, const Vector& x, std::size_t k) {
  if (f.m != 1) {
    throw Error(ErrorCode::VectorOutputUnsupported,
                fmt::format("k-sample median needs a scalar black box, got m = {}", f.m));
  }
  validate_median_k(plan.samples(), k);
  SmoothingConfig plain = cfg;
  plain.covariate = Covariate::None;
  return SmoothingEstimator(f, plain, plan, x).median(k);
}

BlackBox compose_objective(const BlackBox& h, std::function<double(const Vector&)> loss,
                           std::string name) {
  BlackBox out;
  out.n = h.n;
  out.m = 1;
  out.name = name.empty() ? "loss(" + h.name + ")" : std::move(name);
  out.eval = [inner = h.eval, loss = std::move(loss)](const Vector& x) {
    Vector y(1);
    y(0) = loss(inner(x));
    return y;
  };
  return out;
}

}  // namespace zsmooth
