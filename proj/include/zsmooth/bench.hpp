#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zsmooth/estimators.hpp"

namespace zsmooth {

// One benchmark grid: every combination of distribution, sample count,
// strategy, antithetic flag and covariate is a cell.
//
// Functions: "argsort", "rank" (n = length), "shortest-path" (n x n grid),
// "heaviside" (n inputs), "staircase" (n = 1, unit step), "constant".
struct BenchSpec {
  std::string function = "argsort";
  std::size_t n = 3;
  std::vector<DistributionKind> distributions{DistributionKind::Gaussian};
  std::vector<SamplingKind> strategies{SamplingKind::MC};
  std::vector<bool> antithetic{false};
  std::vector<Covariate> covariates{Covariate::None};
  std::vector<std::size_t> samples{1000};
  std::size_t trials = 100;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Throws Error(InvalidArgument) on an empty list, unknown function or bad size.
void validate(const BenchSpec& spec);

// Flat key=value lines, '#' comments, comma-separated lists.
BenchSpec parse_bench_spec(std::istream& in);
BenchSpec parse_bench_spec_file(const std::string& path);
// Inverse of parse_bench_spec.
std::string format_bench_spec(const BenchSpec& spec);

// How base points are drawn for `function`.
std::string base_point_rule(const std::string& function);

// Input dimension of the black box for (function, n).
std::size_t input_dim(const std::string& function, std::size_t n);
BlackBox bench_function(const std::string& function, std::size_t n);

struct BenchRow {
  std::string function;
  std::size_t n = 0;
  DistributionKind distribution = DistributionKind::Gaussian;
  Strategy strategy;
  Covariate covariate = Covariate::None;
  std::size_t samples = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  // Empty for cells the sampling rules do not allow.
  std::optional<double> mean_l2;
  std::optional<double> stderr_l2;
  std::optional<double> oracle_se;
  // Oracle SE above 10% of the measured error.
  bool flagged = false;
  std::string invalid_reason;
};

struct BenchResult {
  BenchSpec spec;
  std::vector<BenchRow> rows;
};

// Per trial, base points are shared by all cells and the oracle by all cells
// with the same distribution and sample count, so cells are paired.
BenchResult run_bench(const BenchSpec& spec);

// Oracle budget for a cell with s samples: 64 s, capped at 2^22.
std::size_t oracle_budget(std::size_t samples);

// '#' header lines (base-point rule, version, flagged cells, plus any
// `extra_header` lines), the column row, then one row per cell.
void write_bench_csv(const BenchResult& result, std::ostream& out,
                     const std::vector<std::string>& extra_header = {});

inline constexpr const char* kBenchVersion = "zsmooth-bench 1";

}  // namespace zsmooth
