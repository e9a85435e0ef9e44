// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "zsmooth/bench.hpp"
#include "zsmooth/errors.hpp"
#include "zsmooth/estimators.hpp"
#include "zsmooth/optim.hpp"
#include "zsmooth/sampling.hpp"
#include "zsmooth/testbed.hpp"

using namespace zsmooth;
using K = DistributionKind;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + std::move(what));
    }
  }
  void note(std::string what) { notes.push_back(std::move(what)); }
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

SmoothingConfig config(K d, double gamma, std::size_t s, SamplingKind kind, Covariate c,
                       bool anti = false) {
  SmoothingConfig cfg;
  cfg.distribution = Distribution(d);
  cfg.scale = Scale::scalar(gamma);
  cfg.samples = s;
  cfg.strategy = Strategy{kind, anti};
  cfg.covariate = c;
  return cfg;
}

double Phi(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double phi(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * std::numbers::pi); }

// Densities written out directly rather than taken from the library.
double density(K k, double t) {
  switch (k) {
    case K::Gaussian: return phi(t);
    case K::Logistic: return std::exp(-t) / std::pow(1 + std::exp(-t), 2);
    case K::Gumbel: return std::exp(-(t + std::exp(-t)));
    case K::Cauchy: return 1.0 / (std::numbers::pi * (1 + t * t));
    case K::Laplace: return 0.5 * std::exp(-std::abs(t));
    case K::Triangular: return std::max(0.0, 1.0 - std::abs(t));
  }
  return 0.0;
}

bool within_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::abs(want) + 1e-12;
}

// 1. Heaviside slope equals the noise density at -x.
Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  for (auto d : kAllDistributions) {
    for (double x : {-1.0, 0.0, 1.0}) {
      const auto cfg = config(d, 1.0, 1 << 16, SamplingKind::RQMCCartesian, Covariate::LOO);
      const double g = jacobian(heaviside_box(1), cfg, make_plan(cfg, 1, 101), vec({x}))(0, 0);
      const double want = density(d, -x);
      if (want > 0) worst = std::max(worst, std::abs(g - want) / want);
      o.require(within_rel(g, want, 0.02),
                fmt::format("{} x={}: {:.6f} vs {:.6f}", to_string(d), x, g, want));
    }
  }
  o.note(fmt::format("18 cases, worst relative error {:.2e}", worst));
  return o;
}

// 2. Scale derivative of the smoothed Heaviside; zero for a linear map.
Outcome criterion2() {
  Outcome o;
  {
    const auto cfg = config(K::Gaussian, 1.0, 1 << 16, SamplingKind::RQMCCartesian, Covariate::LOO);
    const double g = dgamma(heaviside_box(1), cfg, make_plan(cfg, 1, 202), vec({1}))(0);
    const double want = -phi(1.0);
    o.require(within_rel(g, want, 0.02), fmt::format("heaviside dgamma {:.6f} vs {:.6f}", g, want));
    o.note(fmt::format("heaviside dgamma {:.6f} (exact {:.6f})", g, want));
  }
  for (auto d : kAllDistributions) {
    if (!Distribution(d).symmetric()) continue;
    const int seeds = 16;
    std::vector<double> vals;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto cfg = config(d, 1.0, 1 << 14, SamplingKind::RQMCCartesian, Covariate::LOO);
      vals.push_back(dgamma(linear_box(1), cfg, make_plan(cfg, 1, 300 + seed), vec({0.7}))(0));
    }
    double mean = 0.0, sq = 0.0;
    for (double v : vals) mean += v / seeds;
    for (double v : vals) sq += (v - mean) * (v - mean);
    const double se = std::sqrt(sq / (seeds - 1) / seeds);
    o.require(std::abs(mean) <= 4 * se + 1e-12,
              fmt::format("{} linear dgamma {:.3e} with se {:.3e}", to_string(d), mean, se));
    o.note(fmt::format("{} linear dgamma {:.2e} (se {:.1e})", to_string(d), mean, se));
  }
  return o;
}

// 3. x and L gradients under a diagonal scale against finite differences of
//    the closed form Phi(x_0 / |row 0 of L|).
Outcome criterion3() {
  Outcome o;
  const Vector x = vec({1, 0});
  Matrix L = Matrix::Zero(2, 2);
  L(0, 0) = 2.0;
  L(1, 1) = 1.0;
  const auto exact = [](const Vector& xx, const Matrix& ll) {
    return Phi(xx(0) / std::hypot(ll(0, 0), ll(0, 1)));
  };

  auto cfg = config(K::Gaussian, 1.0, 512 * 512, SamplingKind::RQMCCartesian, Covariate::LOO);
  cfg.scale = Scale::matrix(L);
  const int seeds = 8;
  Vector gx = Vector::Zero(2);
  Matrix gL = Matrix::Zero(2, 2);
  for (int seed = 0; seed < seeds; ++seed) {
    SmoothingEstimator est(heaviside_box(2), cfg, make_plan(cfg, 2, 400 + seed), x);
    gx += est.jacobian().row(0).transpose() / seeds;
    const auto t = est.dL();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) gL(i, j) += t(0, i, j) / seeds;
  }

  const double h = 1e-5;
  Vector fx(2);
  Matrix fL(2, 2);
  for (int i = 0; i < 2; ++i) {
    Vector up = x, dn = x;
    up(i) += h;
    dn(i) -= h;
    fx(i) = (exact(up, L) - exact(dn, L)) / (2 * h);
    for (int j = 0; j < 2; ++j) {
      Matrix lu = L, ld = L;
      lu(i, j) += h;
      ld(i, j) -= h;
      fL(i, j) = (exact(x, lu) - exact(x, ld)) / (2 * h);
    }
  }
  // 2% of the largest entry in each block; zero entries have no relative scale.
  const double ex = (gx - fx).cwiseAbs().maxCoeff() / fx.cwiseAbs().maxCoeff();
  const double eL = (gL - fL).cwiseAbs().maxCoeff() / fL.cwiseAbs().maxCoeff();
  o.require(ex <= 0.02, fmt::format("x block error {:.3e}", ex));
  o.require(eL <= 0.02, fmt::format("L block error {:.3e}", eL));
  o.note(fmt::format("dx ({:.5f}, {:.5f}) vs ({:.5f}, {:.5f}); dL00 {:.5f} vs {:.5f}; block errors {:.2e}, {:.2e}",
                     gx(0), gx(1), fx(0), fx(1), gL(0, 0), fL(0, 0), ex, eL));
  return o;
}

// 4. Output covariance gradient on the Heaviside.
Outcome criterion4() {
  Outcome o;
  const auto cfg = config(K::Gaussian, 1.0, 1 << 18, SamplingKind::RQMCCartesian, Covariate::LOO);
  const auto plan = make_plan(cfg, 1, 500);
  const double at1 = output_cov(heaviside_box(1), cfg, plan, vec({1})).d_dx(0, 0, 0);
  const double at0 = output_cov(heaviside_box(1), cfg, plan, vec({0})).d_dx(0, 0, 0);
  const double want = phi(1.0) * (1 - 2 * Phi(1.0));
  o.require(within_rel(at1, want, 0.05), fmt::format("x=1: {:.6f} vs {:.6f}", at1, want));
  o.require(std::abs(at0) <= 0.01, fmt::format("x=0: {:.3e}", at0));
  o.note(fmt::format("x=1 {:.6f} (exact {:.6f}); x=0 {:.2e}", at1, want, at0));
  return o;
}

// 5. k-sample median: exhaustive agreement, weights, Cauchy robustness.
Outcome criterion5() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = config(K::Gaussian, 1.0, 6, SamplingKind::MC, Covariate::None);
    const auto plan = make_plan(cfg, 1, seed);
    const auto g = BlackBox{1, 1, [](const Vector& v) { return Vector::Constant(1, std::sin(3 * v(0))); }, "sin"};
    const auto est = median_gradient(g, cfg, plan, vec({0.3}), 3);
    double value = 0.0, grad = 0.0;
    int subsets = 0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b)
        for (int c = b + 1; c < 6; ++c) {
          std::array<int, 3> idx{a, b, c};
          const auto out = [&](int i) { return std::sin(3 * (0.3 + plan.eps(i, 0))); };
          std::sort(idx.begin(), idx.end(), [&](int i, int j) { return out(i) < out(j); });
          value += out(idx[1]);
          grad += out(idx[1]) * plan.eps(idx[1], 0);
          ++subsets;
        }
    worst = std::max({worst, std::abs(est.value - value / subsets), std::abs(est.gradient(0) - grad / subsets)});
  }
  o.require(worst <= 1e-12, fmt::format("exhaustive mismatch {:.3e}", worst));

  const std::vector<double> v{0.4, -1.0, 3.0, 0.1, 2.0};
  const auto q = median_weights(v, 3);
  // Sorted order: -1, 0.1, 0.4, 2, 3 carries weights 0, .3, .4, .3, 0.
  const std::vector<double> want{0.4, 0.0, 0.0, 0.3, 0.3};
  double werr = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) werr = std::max(werr, std::abs(q[i] - want[i]));
  o.require(werr <= 1e-12, fmt::format("median weights off by {:.3e}", werr));

  std::vector<std::pair<std::size_t, std::pair<double, double>>> spread;
  for (std::size_t s : {1000u, 100000u}) {
    double med_max = 0.0, mean_max = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto cfg = config(K::Cauchy, 1.0, s, SamplingKind::MC, Covariate::None);
      const auto plan = make_plan(cfg, 1, 600 + seed);
      SmoothingEstimator est(linear_box(1), cfg, plan, vec({0}));
      med_max = std::max(med_max, std::abs(est.median(5).value));
      mean_max = std::max(mean_max, std::abs(est.value()(0)));
    }
    spread.push_back({s, {med_max, mean_max}});
  }
  const auto [med_small, mean_small] = spread[0].second;
  const auto [med_large, mean_large] = spread[1].second;
  o.require(med_large < 0.05, fmt::format("median value reached {:.3f}", med_large));
  o.require(med_large < med_small, "median spread did not shrink with s");
  o.require(mean_small > 1.0 && mean_large > 1.0, "plain mean spread stayed small");
  o.require(mean_large > 10 * med_large, "plain mean not wider than the median");
  o.note(fmt::format("exhaustive err {:.1e}; max |median| {:.3f} -> {:.4f}, max |mean| {:.1f} -> {:.1f} (s 1e3 -> 1e5)",
                     worst, med_small, med_large, mean_small, mean_large));
  return o;
}

const BenchRow& row(const BenchResult& r, K d, SamplingKind k, Covariate c) {
  for (const auto& x : r.rows) {
    if (x.distribution == d && x.strategy.kind == k && x.covariate == c && !x.strategy.antithetic) return x;
  }
  throw std::runtime_error("missing bench row");
}

// 6. Strategy ordering on a three element sort.
Outcome criterion6() {
  Outcome o;
  BenchSpec spec;
  spec.function = "argsort";
  spec.n = 3;
  spec.distributions = {K::Gaussian, K::Triangular};
  spec.strategies = {SamplingKind::MC, SamplingKind::RQMCCartesian, SamplingKind::RQMCLatin, SamplingKind::QMCLatin};
  spec.covariates = {Covariate::None, Covariate::LOO};
  spec.samples = {1000};
  spec.trials = 200;
  spec.gamma = 0.1;
  spec.seed = 1;
  const auto r = run_bench(spec);
  const double rc = *row(r, K::Gaussian, SamplingKind::RQMCCartesian, Covariate::LOO).mean_l2;
  const double rl = *row(r, K::Gaussian, SamplingKind::RQMCLatin, Covariate::LOO).mean_l2;
  const double ql = *row(r, K::Gaussian, SamplingKind::QMCLatin, Covariate::LOO).mean_l2;
  const double mc = *row(r, K::Gaussian, SamplingKind::MC, Covariate::None).mean_l2;
  o.require(rc < rl, "rqmc-cartesian+loo not below rqmc-latin+loo");
  o.require(rl <= ql, "rqmc-latin+loo above qmc-latin+loo");
  o.require(ql < mc, "qmc-latin+loo not below mc+none");
  o.require(mc >= 3 * rc, fmt::format("extreme ratio {:.2f}", mc / rc));
  for (auto c : {Covariate::None, Covariate::LOO}) {
    const double tq = *row(r, K::Triangular, SamplingKind::QMCLatin, c).mean_l2;
    const double tr = *row(r, K::Triangular, SamplingKind::RQMCCartesian, c).mean_l2;
    o.require(tq < tr, fmt::format("triangular {}: qmc-latin {:.4f} vs rqmc-cartesian {:.4f}", to_string(c), tq, tr));
    if (c == Covariate::LOO) o.note(fmt::format("triangular qmc-latin {:.4f} < rqmc-cartesian {:.4f}", tq, tr));
  }
  o.note(fmt::format("gaussian {:.4f} < {:.4f} <= {:.4f} < {:.4f}, ratio {:.2f}", rc, rl, ql, mc, mc / rc));
  return o;
}

// 7. The f(x) covariate on an 8x8 shortest path.
Outcome criterion7() {
  Outcome o;
  BenchSpec spec;
  spec.function = "shortest-path";
  spec.n = 8;
  spec.distributions = {K::Gaussian};
  spec.strategies = {SamplingKind::MC};
  spec.covariates = {Covariate::None, Covariate::FAtX};
  spec.samples = {1024};
  spec.trials = 20;
  spec.gamma = 1e-3;
  spec.seed = 1;
  const auto r = run_bench(spec);
  const double none = *row(r, K::Gaussian, SamplingKind::MC, Covariate::None).mean_l2;
  const double fx = *row(r, K::Gaussian, SamplingKind::MC, Covariate::FAtX).mean_l2;
  o.require(none >= 10 * fx, fmt::format("ratio {:.2f}", none / fx));
  o.note(fmt::format("mc+none {:.2f} vs mc+f(x) {:.3f}, ratio {:.0f}", none, fx, none / fx));
  return o;
}

// 8. Exact zeros.
Outcome criterion8() {
  Outcome o;
  for (auto d : kAllDistributions) {
    const auto cfg = config(d, 0.7, 257, SamplingKind::MC, Covariate::FAtX);
    const auto j = jacobian(constant_box(3, 5.0), cfg, make_plan(cfg, 3, 800), vec({1, -2, 0.5}));
    o.require(j.isZero(0.0), fmt::format("constant + f(x) under {}", to_string(d)));
  }
  for (auto d : kAllDistributions) {
    if (!Distribution(d).symmetric()) continue;
    for (auto kind : {SamplingKind::MC, SamplingKind::RQMCLatin, SamplingKind::QMCLatin}) {
      const auto cfg = config(d, 1.3, 200, kind, Covariate::None, true);
      const auto j = jacobian(constant_box(2, -3.25), cfg, make_plan(cfg, 2, 801), vec({0.5, 4}));
      o.require(j.isZero(0.0), fmt::format("antithetic {} {}", to_string(d), to_string(kind)));
    }
  }
  {
    const auto cfg = config(K::Laplace, 1.0, 3, SamplingKind::MC, Covariate::None);
    SamplePlan plan;
    plan.unit_points = Matrix::Constant(3, 1, 0.5);
    plan.eps = Matrix(3, 1);
    plan.eps << 0.0, 0.8, -0.4;
    // A huge output at eps = 0 must not leak into the gradient.
    const auto f = BlackBox{1, 1, [](const Vector& v) { return Vector::Constant(1, v(0) == 0.0 ? 1e9 : v(0)); }, "spike"};
    const double g = jacobian(f, cfg, plan, vec({0}))(0, 0);
    const double want = (0.8 * 1.0 + (-0.4) * -1.0) / 3;
    o.require(std::abs(g - want) <= 1e-15, fmt::format("laplace zero sample leaked: {:.6g}", g));
  }
  o.note("f(x) covariate, antithetic cancellation and the laplace kink all exact");
  return o;
}

// 9. Plan structure and reproducibility.
Outcome criterion9() {
  Outcome o;
  int plans = 0;
  for (auto kind : {SamplingKind::QMCLatin, SamplingKind::RQMCLatin}) {
    for (std::size_t s : {1u, 2u, 3u, 10u, 97u, 1000u}) {
      for (std::size_t n : {1u, 2u, 5u, 16u}) {
        const auto u = make_plan(Strategy{kind, false}, s, n, 900 + s).unit_points;
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
          std::vector<int> bins(s, 0);
          for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const auto b = static_cast<std::size_t>(std::floor(u(i, j) * static_cast<double>(s)));
            if (b < s) ++bins[b];
          }
          o.require(std::all_of(bins.begin(), bins.end(), [](int c) { return c == 1; }),
                    fmt::format("{} s={} n={} column {}", to_string(kind), s, n, j));
        }
        ++plans;
      }
    }
  }
  const std::vector<std::pair<std::size_t, std::size_t>> bad{{10, 2}, {1001, 3}, {17, 4}, {2, 2}, {30, 3}};
  for (auto kind : {SamplingKind::QMCCartesian, SamplingKind::RQMCCartesian}) {
    for (auto [s, n] : bad) {
      bool rejected = false;
      try {
        make_plan(Strategy{kind, false}, s, n, 1);
      } catch (const Error& e) {
        rejected = e.code() == ErrorCode::CartesianSampleCount;
      }
      o.require(rejected, fmt::format("{} accepted s={} n={}", to_string(kind), s, n));
    }
    o.require(make_plan(Strategy{kind, false}, 1000, 3, 1).samples() == 1000, "1000 = 10^3 rejected");
  }
  for (auto kind : {SamplingKind::MC, SamplingKind::QMCCartesian, SamplingKind::RQMCCartesian, SamplingKind::QMCLatin,
                    SamplingKind::RQMCLatin}) {
    for (bool anti : {false, true}) {
      const Strategy st{kind, anti};
      const std::size_t s = st.cartesian() ? (anti ? 250 : 125) : 120;
      const auto a = make_plan(st, s, 3, 77, Distribution(K::Logistic));
      const auto b = make_plan(st, s, 3, 77, Distribution(K::Logistic));
      o.require(a.unit_points == b.unit_points && a.eps == b.eps,
                fmt::format("{} antithetic={} not reproducible", to_string(kind), anti));
    }
  }
  o.note(fmt::format("{} latin plans checked", plans));
  return o;
}

// 10. Staircase descent.
Outcome criterion10() {
  Outcome o;
  const auto f = compose_objective(staircase_box(1.0), [](const Vector& v) { return std::abs(v(0)); });
  const auto smoothed = [](double x) {
    double t = 0.0;
    for (int k = -60; k <= 60; ++k) t += std::abs(k) * (Phi(k + 1 - x) - Phi(k - x));
    return t;
  };
  MinimizeOptions opt;
  opt.steps = 200;
  opt.lr = 0.5;
  const auto rqmc = config(K::Gaussian, 1.0, 256, SamplingKind::RQMCCartesian, Covariate::LOO);
  const auto mc = config(K::Gaussian, 1.0, 256, SamplingKind::MC, Covariate::None);
  int hits = 0;
  std::vector<double> fr, fm;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    opt.seed = seed;
    const double xr = minimize(f, rqmc, vec({5.3}), opt).back().x(0);
    const double xm = minimize(f, mc, vec({5.3}), opt).back().x(0);
    hits += std::abs(xr) < 1.0;
    fr.push_back(smoothed(xr));
    fm.push_back(smoothed(xm));
  }
  std::sort(fr.begin(), fr.end());
  std::sort(fm.begin(), fm.end());
  const double mr = 0.5 * (fr[24] + fr[25]), mm = 0.5 * (fm[24] + fm[25]);
  o.require(hits >= 45, fmt::format("{} of 50 seeds reached the basin", hits));
  o.require(mr < mm, fmt::format("median objective {:.5f} vs {:.5f}", mr, mm));
  o.note(fmt::format("{}/50 in basin; median smoothed objective {:.5f} vs mc+none {:.5f}", hits, mr, mm));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << fmt::format("criterion {:>2}: {} ({:.1f}s) {}", id, o.pass ? "PASS" : "FAIL", secs, detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}
