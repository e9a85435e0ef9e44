#include "zsmooth/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "zsmooth/bench.hpp"
#include "zsmooth/errors.hpp"
#include "zsmooth/estimators.hpp"
#include "zsmooth/optim.hpp"
#include "zsmooth/testbed.hpp"

namespace zsmooth {

namespace {

using json = nlohmann::ordered_json;

const std::vector<std::string> kFunctions{"argsort",   "rank",      "shortest-path", "heaviside",
                                          "staircase", "linear",    "constant"};

[[noreturn]] void usage_error(const std::string& message) {
  throw Error(ErrorCode::InvalidArgument, message);
}

std::string quote(const std::string& s) {
  if (!s.empty() && s.find_first_of(" \t'\"\\$") == std::string::npos) return s;
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() || !std::isfinite(out.back())) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error(fmt::format("{}: '{}' is not a finite number", flag, item));
    }
  }
  if (out.empty()) usage_error(fmt::format("{}: empty list", flag));
  return out;
}

std::string join_doubles(const Vector& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(fmt::format("{}", x));
  return fmt::format("{}", fmt::join(parts, ","));
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error(fmt::format("cannot open '{}'", path));
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_list("--scale-matrix", line));
  }
  if (rows.empty()) usage_error(fmt::format("'{}' is empty", path));
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      usage_error(fmt::format("'{}': ragged row {}", path, i + 1));
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// Options shared by estimate and optimize.
struct Common {
  std::string function;
  std::size_t n = 0;
  std::string x;
  std::string grid;
  std::string dist = "gaussian";
  double gamma = 1.0;
  std::string scale_matrix;
  std::size_t samples = 1024;
  std::string strategy = "mc";
  bool antithetic = false;
  std::string covariate = "none";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double step = 1.0;
  std::string loss = "none";
};

void add_common(CLI::App* app, Common& c, const std::string& x_flag) {
  app->add_option("--function", c.function, "black box: " + fmt::format("{}", fmt::join(kFunctions, ", ")))
      ->required();
  app->add_option("--n", c.n, "input dimension");
  app->add_option(x_flag, c.x, "comma-separated input point");
  app->add_option("--grid", c.grid, "cost grid CSV for shortest-path");
  app->add_option("--dist", c.dist, "noise distribution");
  app->add_option("--gamma", c.gamma, "isotropic scale");
  app->add_option("--scale-matrix", c.scale_matrix, "lower-triangular scale matrix CSV");
  app->add_option("--samples", c.samples, "samples per estimate");
  app->add_option("--strategy", c.strategy, "sampling strategy");
  app->add_flag("--antithetic", c.antithetic, "mirrored sample pairs");
  app->add_option("--covariate", c.covariate, "none, fx or loo");
  app->add_option("--seed", c.seed, "plan seed");
  app->add_option("--threads", c.threads, "evaluation threads");
  app->add_option("--step", c.step, "staircase step");
  app->add_option("--loss", c.loss, "none, abs (sum of |f_i|) or sum (sum of f_i)");
}

struct Problem {
  BlackBox f;
  Vector x;
  SmoothingConfig cfg;
  std::string point_args;  // canonical --n/--x or --grid arguments
  std::string scale_args;
};

Problem resolve(const Common& c, const std::string& x_flag, bool scale_matrix_allowed) {
  if (std::find(kFunctions.begin(), kFunctions.end(), c.function) == kFunctions.end()) {
    usage_error(fmt::format("unknown function '{}'; valid: {}", c.function,
                            fmt::join(kFunctions, ", ")));
  }
  Problem p;
  if (c.function == "shortest-path") {
    if (c.grid.empty()) usage_error("shortest-path requires --grid FILE");
    if (!c.x.empty()) usage_error(fmt::format("shortest-path takes --grid, not {}", x_flag));
    const auto grid = read_grid_csv_file(c.grid);
    p.f = shortest_path_box(grid.height(), grid.width());
    p.x.resize(static_cast<Eigen::Index>(grid.height() * grid.width()));
    for (std::size_t r = 0; r < grid.height(); ++r)
      for (std::size_t col = 0; col < grid.width(); ++col)
        p.x(static_cast<Eigen::Index>(r * grid.width() + col)) =
            grid.costs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col));
    if (c.n != 0 && c.n != p.f.n) {
      usage_error(fmt::format("--n {} does not match the {}-cell grid", c.n, p.f.n));
    }
    p.point_args = fmt::format("--grid {}", quote(c.grid));
  } else {
    if (!c.grid.empty()) usage_error("--grid is only valid with shortest-path");
    std::vector<double> xs;
    if (!c.x.empty()) xs = parse_list(x_flag, c.x);
    std::size_t n = c.n != 0 ? c.n : xs.size();
    if (n == 0) usage_error(fmt::format("give --n or {}", x_flag));
    if (!xs.empty() && xs.size() != n) {
      usage_error(fmt::format("{} has {} entries but --n is {}", x_flag, xs.size(), n));
    }
    p.x = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < xs.size(); ++i) p.x(static_cast<Eigen::Index>(i)) = xs[i];
    if (c.function == "argsort") p.f = argsort_box(n);
    else if (c.function == "rank") p.f = ranking_box(n);
    else if (c.function == "heaviside") p.f = heaviside_box(n);
    else if (c.function == "linear") p.f = linear_box(n);
    else if (c.function == "constant") p.f = constant_box(n, 1.0);
    else {
      if (n != 1) usage_error("staircase requires --n 1");
      p.f = staircase_box(c.step);
    }
    p.point_args = fmt::format("--n {} {}={}", n, x_flag, join_doubles(p.x));
  }
  if (c.function == "staircase") p.point_args += fmt::format(" --step {}", c.step);

  if (c.loss == "abs") {
    p.f = compose_objective(p.f, [](const Vector& y) { return y.cwiseAbs().sum(); },
                            "abs(" + p.f.name + ")");
  } else if (c.loss == "sum") {
    p.f = compose_objective(p.f, [](const Vector& y) { return y.sum(); },
                            "sum(" + p.f.name + ")");
  } else if (c.loss != "none") {
    usage_error(fmt::format("unknown loss '{}'; valid: none, abs, sum", c.loss));
  }

  const auto dist = parse_distribution(c.dist);
  if (!dist) {
    usage_error(fmt::format("unknown distribution '{}'; valid: {}", c.dist, distribution_names()));
  }
  const auto kind = parse_sampling(c.strategy);
  if (!kind) {
    usage_error(fmt::format("unknown strategy '{}'; valid: {}", c.strategy, sampling_names()));
  }
  const auto cov = parse_covariate(c.covariate);
  if (!cov) usage_error(fmt::format("unknown covariate '{}'; valid: none, fx, loo", c.covariate));

  p.cfg.distribution = Distribution(*dist);
  p.cfg.samples = c.samples;
  p.cfg.strategy = Strategy{*kind, c.antithetic};
  p.cfg.covariate = *cov;
  if (!c.scale_matrix.empty()) {
    if (!scale_matrix_allowed) usage_error("--scale-matrix is not supported here");
    p.cfg.scale = Scale::matrix(read_matrix_csv(c.scale_matrix));
    if (static_cast<std::size_t>(p.cfg.scale.lower().rows()) != p.f.n) {
      usage_error(fmt::format("scale matrix is {}x{} but n is {}", p.cfg.scale.lower().rows(),
                              p.cfg.scale.lower().cols(), p.f.n));
    }
    p.scale_args = fmt::format("--scale-matrix {}", quote(c.scale_matrix));
  } else {
    if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) usage_error("--gamma must be > 0");
    p.cfg.scale = Scale::scalar(c.gamma);
    p.scale_args = fmt::format("--gamma {}", c.gamma);
  }
  validate_plan_request(p.cfg.strategy, p.cfg.samples, p.f.n, p.cfg.distribution);
  if (p.cfg.covariate == Covariate::LOO && p.cfg.samples < 2) {
    throw Error(ErrorCode::CovariateNeedsTwoSamples, "loo covariate requires samples >= 2");
  }
  return p;
}

std::string sampling_args(const Common& c, const Problem& p) {
  std::string s = fmt::format("--samples {} --strategy {}", p.cfg.samples,
                              to_string(p.cfg.strategy.kind));
  if (p.cfg.strategy.antithetic) s += " --antithetic";
  s += fmt::format(" --covariate {}", to_string(p.cfg.covariate));
  if (c.loss != "none") s += fmt::format(" --loss {}", c.loss);
  return s;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

json tensor_json(const Tensor& t, std::size_t dim, std::size_t offset) {
  json a = json::array();
  std::size_t stride = 1;
  for (std::size_t d = dim + 1; d < t.rank(); ++d) stride *= t.shape()[d];
  for (std::size_t i = 0; i < t.shape()[dim]; ++i) {
    if (dim + 1 == t.rank()) a.push_back(t.values()[offset + i]);
    else a.push_back(tensor_json(t, dim + 1, offset + i * stride));
  }
  return a;
}

json to_json(const Tensor& t) { return tensor_json(t, 0, 0); }

void csv_block(std::ostream& out, const std::string& name, const Tensor& t) {
  const auto& shape = t.shape();
  std::vector<std::size_t> idx(shape.size(), 0);
  for (double v : t.values()) {
    out << name << ',' << fmt::format("{}", fmt::join(idx, ":")) << ',' << fmt::format("{:.17g}", v)
        << '\n';
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
}

Tensor as_tensor(const Matrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t(i, j) = m(i, j);
  return t;
}

Tensor as_tensor(const Vector& v) {
  Tensor t({static_cast<std::size_t>(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i) t(i) = v(i);
  return t;
}

int cmd_estimate(const Common& c, std::size_t median_k, bool with_cov, const std::string& format,
                 std::ostream& out) {
  if (format != "json" && format != "csv") {
    usage_error(fmt::format("unknown --out '{}'; valid: json, csv", format));
  }
  const auto p = resolve(c, "--x", true);
  std::optional<std::size_t> k;
  if (median_k != 0) k = median_k;

  std::string command = fmt::format("zsmooth estimate --function {} {} --dist {} {} {}",
                                    c.function, p.point_args,
                                    to_string(p.cfg.distribution.kind()), p.scale_args,
                                    sampling_args(c, p));
  if (k) command += fmt::format(" --median-k {}", *k);
  if (with_cov) command += " --with-cov";
  command += fmt::format(" --seed {} --threads {} --out {}", c.seed, c.threads, format);

  const auto plan = make_plan(p.cfg, p.f.n, c.seed);
  const SmoothingEstimator est(p.f, p.cfg, plan, p.x, c.threads);
  const auto report = est.report(with_cov, k);

  if (format == "json") {
    json j;
    j["command"] = command;
    j["function"] = p.f.name;
    j["n"] = p.f.n;
    j["m"] = p.f.m;
    j["seed"] = c.seed;
    j["samples_used"] = report.samples_used;
    j["value"] = to_json(report.value);
    j["jacobian"] = to_json(report.jacobian);
    if (report.dgamma) j["dgamma"] = to_json(*report.dgamma);
    if (report.dL) j["dL"] = to_json(*report.dL);
    if (report.output_cov) {
      j["output_cov"] = {{"cov", to_json(report.output_cov->cov)},
                         {"d_dx", to_json(report.output_cov->d_dx)},
                         {"d_dL", to_json(report.output_cov->d_dL)}};
    }
    if (report.median) {
      j["median"] = {{"k", report.median->k},
                     {"value", report.median->value},
                     {"gradient", to_json(report.median->gradient)}};
    }
    out << j.dump(2) << '\n';
  } else {
    out << "# command: " << command << '\n';
    out << fmt::format("# function: {} (n = {}, m = {}), seed {}, samples used {}\n", p.f.name,
                       p.f.n, p.f.m, c.seed, report.samples_used);
    out << "block,index,value\n";
    csv_block(out, "value", as_tensor(report.value));
    csv_block(out, "jacobian", as_tensor(report.jacobian));
    if (report.dgamma) csv_block(out, "dgamma", as_tensor(*report.dgamma));
    if (report.dL) csv_block(out, "dL", *report.dL);
    if (report.output_cov) {
      csv_block(out, "cov", as_tensor(report.output_cov->cov));
      csv_block(out, "cov_dx", report.output_cov->d_dx);
      csv_block(out, "cov_dL", report.output_cov->d_dL);
    }
    if (report.median) {
      out << fmt::format("median_value,0,{:.17g}\n", report.median->value);
      csv_block(out, "median_gradient", as_tensor(report.median->gradient));
    }
  }
  return kExitOk;
}

int cmd_optimize(const Common& c, std::size_t steps, double lr, double decay, std::ostream& out) {
  const auto p = resolve(c, "--x0", false);
  MinimizeOptions opts;
  opts.steps = steps;
  opts.lr = lr;
  opts.gamma_decay = decay;
  opts.seed = c.seed;
  opts.threads = c.threads;
  const auto command = fmt::format(
      "zsmooth optimize --function {} {} --dist {} {} {} --steps {} --lr {} --gamma-decay {} "
      "--seed {} --threads {}",
      c.function, p.point_args, to_string(p.cfg.distribution.kind()), p.scale_args,
      sampling_args(c, p), steps, lr, decay, c.seed, c.threads);
  const auto trajectory = minimize(p.f, p.cfg, p.x, opts);
  out << "# command: " << command << '\n';
  out << fmt::format("# objective: {} (n = {})\n", p.f.name, p.f.n);
  write_trajectory_csv(trajectory, out);
  return kExitOk;
}

int cmd_bench(const std::string& spec_path, std::string out_path, std::ostream& out) {
  const auto spec = parse_bench_spec_file(spec_path);
  if (out_path.empty()) out_path = std::filesystem::path(spec_path).replace_extension(".csv").string();
  const auto command = fmt::format("zsmooth bench {} --out {}", quote(spec_path), quote(out_path));
  const auto result = run_bench(spec);
  std::ofstream file(out_path, std::ios::binary);
  if (!file) usage_error(fmt::format("cannot write '{}'", out_path));
  write_bench_csv(result, file, {"command: " + command});
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    const auto label = fmt::format("{:>3} {} {}{} {} s={}", i + 1, to_string(r.distribution),
                                   to_string(r.strategy.kind),
                                   r.strategy.antithetic ? "+antithetic" : "",
                                   to_string(r.covariate), r.samples);
    if (r.mean_l2) {
      out << fmt::format("{}: mean_l2 {:.4g} +- {:.2g} (oracle se {:.2g}){}\n", label, *r.mean_l2,
                         *r.stderr_l2, *r.oracle_se, r.flagged ? " [flagged]" : "");
    } else {
      out << fmt::format("{}: skipped ({})\n", label, r.invalid_reason);
    }
  }
  out << fmt::format("wrote {} rows to {}\n", result.rows.size(), out_path);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic smoothing and zeroth-order gradient estimation", "zsmooth"};
  app.require_subcommand(1);

  Common est_opts;
  std::size_t median_k = 0;
  bool with_cov = false;
  std::string format = "json";
  auto* estimate = app.add_subcommand("estimate", "estimate a smoothed value and its gradients");
  add_common(estimate, est_opts, "--x");
  estimate->add_option("--median-k", median_k, "odd k for the k-sample median estimator");
  estimate->add_flag("--with-cov", with_cov, "include the output covariance block");
  estimate->add_option("--out", format, "json or csv");

  Common opt_opts;
  std::size_t steps = 100;
  double lr = 0.1;
  double decay = 1.0;
  auto* optimize = app.add_subcommand("optimize", "gradient descent on the smoothed objective");
  add_common(optimize, opt_opts, "--x0");
  optimize->add_option("--steps", steps, "number of steps");
  optimize->add_option("--lr", lr, "learning rate");
  optimize->add_option("--gamma-decay", decay, "gamma multiplier per step");

  std::string spec_path, bench_out;
  auto* bench = app.add_subcommand("bench", "run a variance benchmark from a spec file");
  bench->add_option("spec", spec_path, "key=value spec file")->required();
  bench->add_option("--out", bench_out, "CSV path (default: spec path with .csv)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est_opts, median_k, with_cov, format, out);
    if (optimize->parsed()) return cmd_optimize(opt_opts, steps, lr, decay, out);
    return cmd_bench(spec_path, bench_out, out);
  } catch (const NonFiniteOutputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonFinite;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace zsmooth
