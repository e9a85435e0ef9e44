#include "zsmooth/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"

namespace zsmooth {

namespace {

std::vector<std::size_t> stable_order(const Vector& x) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x(a) < x(b); });
  return idx;
}

}  // namespace

Matrix argsort_permutation(const Vector& x) {
  const auto idx = stable_order(x);
  Matrix p = Matrix::Zero(x.size(), x.size());
  for (std::size_t r = 0; r < idx.size(); ++r) p(r, idx[r]) = 1.0;
  return p;
}

Matrix ranking_matrix(const Vector& x) { return argsort_permutation(x).transpose(); }

GridCostMap GridCostMap::corners(Matrix costs) {
  GridCostMap g;
  g.source = {0, 0};
  g.target = {static_cast<std::size_t>(std::max<Eigen::Index>(costs.rows() - 1, 0)),
              static_cast<std::size_t>(std::max<Eigen::Index>(costs.cols() - 1, 0))};
  g.costs = std::move(costs);
  return g;
}

ShortestPath shortest_path(const GridCostMap& grid) {
  const std::size_t h = grid.height();
  const std::size_t w = grid.width();
  if (h < 2 || w < 2) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("grid must be at least 2x2, got {}x{}", h, w));
  }
  if (!(grid.costs.array() > 0.0).all() || !grid.costs.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "grid costs must be finite and positive");
  }
  if (grid.source.row >= h || grid.source.col >= w || grid.target.row >= h ||
      grid.target.col >= w) {
    throw Error(ErrorCode::InvalidArgument, "source or target outside the grid");
  }

  const std::size_t cells = h * w;
  const auto id = [w](Cell c) { return c.row * w + c.col; };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::vector<double> dist(cells, kInf);
  std::vector<std::size_t> pred(cells, kNone);
  std::vector<bool> done(cells, false);

  using Entry = std::tuple<double, std::size_t>;  // (distance, cell id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  const std::size_t src = id(grid.source);
  dist[src] = grid.costs(grid.source.row, grid.source.col);
  queue.emplace(dist[src], src);

  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == id(grid.target)) break;
    const auto ur = static_cast<long>(u / w);
    const auto uc = static_cast<long>(u % w);
    for (long dr = -1; dr <= 1; ++dr) {
      for (long dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const long vr = ur + dr;
        const long vc = uc + dc;
        if (vr < 0 || vc < 0 || vr >= static_cast<long>(h) || vc >= static_cast<long>(w))
          continue;
        const std::size_t v = static_cast<std::size_t>(vr) * w + static_cast<std::size_t>(vc);
        if (done[v]) continue;
        const double nd = d + grid.costs(vr, vc);
        // Cell ids are row-major, so comparing ids is the (row, col) order.
        if (nd < dist[v] || (nd == dist[v] && u < pred[v])) {
          dist[v] = nd;
          pred[v] = u;
          queue.emplace(nd, v);
        }
      }
    }
  }

  ShortestPath out;
  out.mask = Matrix::Zero(h, w);
  out.cost = dist[id(grid.target)];
  for (std::size_t v = id(grid.target); v != kNone; v = pred[v]) {
    out.cells.push_back({v / w, v % w});
    out.mask(v / w, v % w) = 1.0;
    if (v == src) break;
  }
  std::reverse(out.cells.begin(), out.cells.end());
  return out;
}

Matrix shortest_path_mask(const GridCostMap& grid) { return shortest_path(grid).mask; }

GridCostMap read_grid_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || field.find_first_not_of(" \t", used) != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("grid line {}: '{}' is not a number", lineno, field));
      }
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("grid line {}: cost {} is not positive", lineno, v));
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("grid line {} has {} columns, expected {}", lineno, row.size(),
                              rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid must be at least 2x2");
  }
  Matrix costs(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) costs(r, c) = rows[r][c];
  return GridCostMap::corners(std::move(costs));
}

GridCostMap read_grid_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, fmt::format("cannot open grid file {}", path));
  return read_grid_csv(in);
}

Vector heaviside(const Vector& x) {
  Vector y(1);
  y(0) = x(0) >= 0.0 ? 1.0 : 0.0;
  return y;
}

double staircase(double x, double step) { return std::floor(x / step) * step; }

namespace {

Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v(r * m.cols() + c) = m(r, c);
  return v;
}

}  // namespace

BlackBox argsort_box(std::size_t n) {
  return BlackBox{n, n * n, [](const Vector& x) { return flatten(argsort_permutation(x)); },
                  "argsort"};
}

BlackBox ranking_box(std::size_t n) {
  return BlackBox{n, n * n, [](const Vector& x) { return flatten(ranking_matrix(x)); },
                  "rank"};
}

BlackBox shortest_path_box(std::size_t height, std::size_t width, double min_cost) {
  const std::size_t cells = height * width;
  return BlackBox{cells, cells,
                  [height, width, min_cost](const Vector& x) {
                    Matrix costs(height, width);
                    for (std::size_t r = 0; r < height; ++r)
                      for (std::size_t c = 0; c < width; ++c)
                        costs(r, c) = std::max(x(r * width + c), min_cost);
                    return flatten(shortest_path_mask(GridCostMap::corners(std::move(costs))));
                  },
                  "shortest-path"};
}

BlackBox heaviside_box(std::size_t n) {
  return BlackBox{n, 1, [](const Vector& x) { return heaviside(x); }, "heaviside"};
}

BlackBox staircase_box(double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "staircase step must be > 0");
  return BlackBox{1, 1,
                  [step](const Vector& x) {
                    Vector y(1);
                    y(0) = staircase(x(0), step);
                    return y;
                  },
                  "staircase"};
}

BlackBox constant_box(std::size_t n, double c) {
  return BlackBox{n, 1, [c](const Vector&) { return Vector::Constant(1, c); }, "constant"};
}

BlackBox linear_box(std::size_t n) {
  return BlackBox{n, 1, [](const Vector& x) { return Vector::Constant(1, x.sum()); }, "linear"};
}

}  // namespace zsmooth
