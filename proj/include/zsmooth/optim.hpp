#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "zsmooth/estimators.hpp"

namespace zsmooth {

struct TrajectoryPoint {
  std::size_t step = 0;
  Vector x;
  double fx = 0.0;     // unsmoothed f(x)
  double gamma = 0.0;  // scale used for the step that leaves this point
};

using Trajectory = std::vector<TrajectoryPoint>;

struct MinimizeOptions {
  std::size_t steps = 100;
  double lr = 0.1;
  double gamma_decay = 1.0;  // gamma multiplier per step, in (0, 1]
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Gradient descent x <- x - lr * g on the smoothed objective, with a fresh
// plan per step seeded from (seed, step). Requires scalar f and a scalar
// scale. Returns steps + 1 points, the first being x0.
Trajectory minimize(const BlackBox& f, const SmoothingConfig& cfg, const Vector& x0,
                    const MinimizeOptions& options);

// step,x0,...,x{n-1},fx,gamma
void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);

}  // namespace zsmooth
