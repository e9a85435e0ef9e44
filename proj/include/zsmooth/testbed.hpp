#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "zsmooth/estimators.hpp"

namespace zsmooth {

// Piecewise-constant test functions. Each has a zero gradient almost
// everywhere, so only a smoothed gradient carries information.

// P with (P x) sorted ascending; ties keep their original order.
Matrix argsort_permutation(const Vector& x);
// The inverse permutation, argsort_permutation(x)^T.
Matrix ranking_matrix(const Vector& x);

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct GridCostMap {
  Matrix costs;  // height x width, strictly positive
  Cell source;
  Cell target;

  std::size_t height() const noexcept { return static_cast<std::size_t>(costs.rows()); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(costs.cols()); }

  // Source at the top-left corner, target at the bottom-right.
  static GridCostMap corners(Matrix costs);
};

struct ShortestPath {
  Matrix mask;  // height x width, 1 on path cells
  double cost = 0.0;
  std::vector<Cell> cells;  // source to target
};

// Dijkstra under 8-neighborhood. A path costs the sum of all cells on it,
// both endpoints included. Among equal-cost predecessors the smaller
// (row, col) wins.
ShortestPath shortest_path(const GridCostMap& grid);
Matrix shortest_path_mask(const GridCostMap& grid);

// Grid rows as lines of comma-separated positive reals.
GridCostMap read_grid_csv(std::istream& in);
GridCostMap read_grid_csv_file(const std::string& path);

// 1 if x_0 >= 0 else 0.
Vector heaviside(const Vector& x);
// floor(x / step) * step.
double staircase(double x, double step);

BlackBox argsort_box(std::size_t n);
BlackBox ranking_box(std::size_t n);
// Input and output are the row-major flattened grid. Perturbed costs are
// clamped below at `min_cost` so the search stays well defined.
BlackBox shortest_path_box(std::size_t height, std::size_t width, double min_cost = 1e-6);
BlackBox heaviside_box(std::size_t n);
BlackBox staircase_box(double step);
// Validation fixtures: f(x) = c and f(x) = sum_i x_i.
BlackBox constant_box(std::size_t n, double c);
BlackBox linear_box(std::size_t n);

}  // namespace zsmooth
