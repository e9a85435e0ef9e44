#include "zsmooth/bench.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"
#include "zsmooth/oracle.hpp"
#include "zsmooth/rng.hpp"
#include "zsmooth/testbed.hpp"

namespace zsmooth {

namespace {

constexpr std::uint64_t kBaseStream = 0xba5e;
constexpr std::uint64_t kOracleStream = 0x0ac1e;
constexpr std::size_t kOracleCap = std::size_t{1} << 22;

const std::vector<std::string>& function_names() {
  static const std::vector<std::string> names{"argsort",   "rank",      "shortest-path",
                                              "heaviside", "staircase", "constant"};
  return names;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_spec(const std::string& message) {
  throw Error(ErrorCode::InvalidArgument, message);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad_spec(fmt::format("{}: expected a non-negative integer, got '{}'", key, value));
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad_spec(fmt::format("{}: expected a number, got '{}'", key, value));
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "off" || value == "no" || value == "0") return false;
  bad_spec(fmt::format("{}: expected true/false, got '{}'", key, value));
}

template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1u, threads));
  std::vector<std::exception_ptr> errors(count);
  const auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < count; i += workers) run(i);
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Vector base_point(const std::string& function, std::size_t dim, std::uint64_t seed,
                  std::size_t trial) {
  auto rng = RngStream::derive(seed, {kBaseStream, trial});
  Vector x(dim);
  if (function == "shortest-path") {
    for (auto& v : x) v = 0.1 + 0.9 * rng.uniform();
  } else {
    const Distribution gauss(DistributionKind::Gaussian);
    for (auto& v : x) v = gauss.sample(rng);
  }
  return x;
}

struct OracleValue {
  Matrix jacobian;
  double se = 0.0;
};

OracleValue compute_oracle(const BenchSpec& spec, const BlackBox& f, const Distribution& d,
                           const Vector& x, std::size_t samples, std::uint64_t seed) {
  const auto& fn = spec.function;
  if (fn == "constant") return {Matrix::Zero(1, static_cast<Eigen::Index>(f.n)), 0.0};
  if (fn == "heaviside" || fn == "staircase") {
    const auto fixture = fn == "heaviside" ? Fixture::Heaviside : Fixture::Staircase;
    const auto r = analytic_oracle(fixture, d, x, spec.gamma);
    return {r.gradient.transpose(), 0.0};
  }
  const auto est = bruteforce_oracle(f, d, x, Scale::scalar(spec.gamma),
                                     oracle_budget(samples), seed);
  return {est.jacobian, est.bootstrap_se};
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.9g}", *v) : std::string("—");
}

}  // namespace

std::size_t oracle_budget(std::size_t samples) {
  return std::min(kOracleCap, 64 * samples);
}

std::string base_point_rule(const std::string& function) {
  if (function == "shortest-path") {
    return "grid costs i.i.d. uniform in [0.1, 1] per trial, source top-left, target "
           "bottom-right";
  }
  return "x i.i.d. standard normal per trial";
}

std::size_t input_dim(const std::string& function, std::size_t n) {
  return function == "shortest-path" ? n * n : n;
}

BlackBox bench_function(const std::string& function, std::size_t n) {
  if (function == "argsort") return argsort_box(n);
  if (function == "rank") return ranking_box(n);
  if (function == "shortest-path") return shortest_path_box(n, n);
  if (function == "heaviside") return heaviside_box(n);
  if (function == "staircase") return staircase_box(1.0);
  if (function == "constant") return constant_box(n, 1.0);
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown function '{}'", function));
}

void validate(const BenchSpec& spec) {
  const auto& names = function_names();
  if (std::find(names.begin(), names.end(), spec.function) == names.end()) {
    bad_spec(fmt::format("unknown function '{}'; valid: {}", spec.function,
                         fmt::join(names, ", ")));
  }
  if (spec.n == 0) bad_spec("n must be >= 1");
  if (spec.function == "staircase" && spec.n != 1) bad_spec("staircase requires n = 1");
  if (spec.distributions.empty()) bad_spec("distributions list is empty");
  if (spec.strategies.empty()) bad_spec("strategies list is empty");
  if (spec.antithetic.empty()) bad_spec("antithetic list is empty");
  if (spec.covariates.empty()) bad_spec("covariates list is empty");
  if (spec.samples.empty()) bad_spec("samples list is empty");
  for (auto s : spec.samples)
    if (s == 0) bad_spec("samples must be >= 1");
  if (spec.trials == 0) bad_spec("trials must be >= 1");
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) bad_spec("gamma must be > 0");
}

BenchSpec parse_bench_spec(std::istream& in) {
  BenchSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) bad_spec(fmt::format("line {}: expected key=value", lineno));
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    const auto items = split_list(value);

    if (key == "function") {
      spec.function = value;
    } else if (key == "n") {
      spec.n = parse_uint(key, value);
    } else if (key == "distributions") {
      spec.distributions.clear();
      for (const auto& item : items) {
        const auto d = parse_distribution(item);
        if (!d) {
          bad_spec(fmt::format("unknown distribution '{}'; valid: {}", item,
                               distribution_names()));
        }
        spec.distributions.push_back(*d);
      }
    } else if (key == "strategies") {
      spec.strategies.clear();
      for (const auto& item : items) {
        const auto k = parse_sampling(item);
        if (!k) bad_spec(fmt::format("unknown strategy '{}'; valid: {}", item, sampling_names()));
        spec.strategies.push_back(*k);
      }
    } else if (key == "antithetic") {
      spec.antithetic.clear();
      for (const auto& item : items) spec.antithetic.push_back(parse_bool(key, item));
    } else if (key == "covariates") {
      spec.covariates.clear();
      for (const auto& item : items) {
        const auto c = parse_covariate(item);
        if (!c) bad_spec(fmt::format("unknown covariate '{}'; valid: none, fx, loo", item));
        spec.covariates.push_back(*c);
      }
    } else if (key == "samples") {
      spec.samples.clear();
      for (const auto& item : items) spec.samples.push_back(parse_uint(key, item));
    } else if (key == "trials") {
      spec.trials = parse_uint(key, value);
    } else if (key == "gamma") {
      spec.gamma = parse_double(key, value);
    } else if (key == "seed") {
      spec.seed = parse_uint(key, value);
    } else if (key == "threads") {
      spec.threads = static_cast<unsigned>(parse_uint(key, value));
    } else {
      bad_spec(fmt::format("line {}: unknown key '{}'", lineno, key));
    }
  }
  validate(spec);
  return spec;
}

BenchSpec parse_bench_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad_spec(fmt::format("cannot open spec file '{}'", path));
  return parse_bench_spec(in);
}

std::string format_bench_spec(const BenchSpec& spec) {
  std::vector<std::string> dists, strategies, anti, covs, samples;
  for (auto d : spec.distributions) dists.emplace_back(to_string(d));
  for (auto k : spec.strategies) strategies.emplace_back(to_string(k));
  for (bool a : spec.antithetic) anti.emplace_back(a ? "true" : "false");
  for (auto c : spec.covariates) covs.emplace_back(to_string(c));
  for (auto s : spec.samples) samples.push_back(std::to_string(s));
  std::string out;
  out += fmt::format("function={}\n", spec.function);
  out += fmt::format("n={}\n", spec.n);
  out += fmt::format("distributions={}\n", fmt::join(dists, ","));
  out += fmt::format("strategies={}\n", fmt::join(strategies, ","));
  out += fmt::format("antithetic={}\n", fmt::join(anti, ","));
  out += fmt::format("covariates={}\n", fmt::join(covs, ","));
  out += fmt::format("samples={}\n", fmt::join(samples, ","));
  out += fmt::format("trials={}\n", spec.trials);
  out += fmt::format("gamma={}\n", spec.gamma);
  out += fmt::format("seed={}\n", spec.seed);
  out += fmt::format("threads={}\n", spec.threads);
  return out;
}

BenchResult run_bench(const BenchSpec& spec) {
  validate(spec);
  BenchResult result{spec, {}};
  const auto f = bench_function(spec.function, spec.n);
  const auto dim = f.n;

  std::vector<Vector> bases(spec.trials);
  for (std::size_t t = 0; t < spec.trials; ++t) bases[t] = base_point(spec.function, dim, spec.seed, t);

  for (auto dk : spec.distributions) {
    const Distribution d(dk);
    for (auto s : spec.samples) {
      std::vector<OracleValue> oracles(spec.trials);
      bool oracle_ready = false;

      for (auto kind : spec.strategies) {
        for (bool anti : spec.antithetic) {
          for (auto cov : spec.covariates) {
            BenchRow row;
            row.function = spec.function;
            row.n = spec.n;
            row.distribution = dk;
            row.strategy = Strategy{kind, anti};
            row.covariate = cov;
            row.samples = s;
            row.trials = spec.trials;
            row.seed = spec.seed;
            const std::size_t cell = result.rows.size();

            try {
              validate_plan_request(row.strategy, s, dim, d);
              if (cov == Covariate::LOO && s < 2) {
                throw Error(ErrorCode::CovariateNeedsTwoSamples,
                            "leave-one-out covariate requires samples >= 2");
              }
            } catch (const Error& e) {
              row.invalid_reason = e.what();
              result.rows.push_back(std::move(row));
              continue;
            }

            if (!oracle_ready) {
              parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
                const auto seed =
                    RngStream::derive_seed(spec.seed, {kOracleStream, static_cast<std::uint64_t>(dk), s, t});
                oracles[t] = compute_oracle(spec, f, d, bases[t], s, seed);
              });
              oracle_ready = true;
            }

            SmoothingConfig cfg;
            cfg.distribution = d;
            cfg.scale = Scale::scalar(spec.gamma);
            cfg.samples = s;
            cfg.strategy = row.strategy;
            cfg.covariate = cov;

            std::vector<double> errors(spec.trials);
            parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
              const auto plan = make_plan(cfg, dim, RngStream::derive_seed(spec.seed, {cell, t}));
              const Matrix est = SmoothingEstimator(f, cfg, plan, bases[t]).jacobian();
              errors[t] = (est - oracles[t].jacobian).norm();
            });

            double sum = 0.0, se_sum = 0.0;
            for (std::size_t t = 0; t < spec.trials; ++t) {
              sum += errors[t];
              se_sum += oracles[t].se;
            }
            const double trials = static_cast<double>(spec.trials);
            const double mean = sum / trials;
            double var = 0.0;
            for (double e : errors) var += (e - mean) * (e - mean);
            row.mean_l2 = mean;
            row.stderr_l2 = spec.trials > 1 ? std::sqrt(var / (trials - 1.0) / trials) : 0.0;
            row.oracle_se = se_sum / trials;
            row.flagged = *row.oracle_se > 0.1 * mean;
            result.rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return result;
}

void write_bench_csv(const BenchResult& result, std::ostream& out,
                     const std::vector<std::string>& extra_header) {
  const auto& spec = result.spec;
  out << "# " << kBenchVersion << '\n';
  for (const auto& line : extra_header) out << "# " << line << '\n';
  out << "# base points: " << base_point_rule(spec.function) << '\n';
  out << fmt::format("# scale: gamma = {}; oracle budget: 64 x samples, capped at 2^22\n",
                     spec.gamma);
  std::istringstream cfg(format_bench_spec(spec));
  for (std::string line; std::getline(cfg, line);) out << "# spec: " << line << '\n';
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    if (r.flagged) {
      out << fmt::format("# flagged: row {} oracle_se {:.3g} exceeds 10% of mean_l2 {:.3g}\n",
                         i + 1, *r.oracle_se, *r.mean_l2);
    }
  }
  out << "function,n,distribution,strategy,antithetic,covariate,samples,trials,mean_l2,stderr,"
         "oracle_se,seed\n";
  for (const auto& r : result.rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.function, r.n,
                       to_string(r.distribution), to_string(r.strategy.kind),
                       r.strategy.antithetic ? "true" : "false", to_string(r.covariate),
                       r.samples, r.trials, fmt_opt(r.mean_l2), fmt_opt(r.stderr_l2),
                       fmt_opt(r.oracle_se), r.seed);
  }
}

}  // namespace zsmooth
