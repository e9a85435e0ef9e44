#include "zsmooth/optim.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "zsmooth/errors.hpp"
#include "zsmooth/rng.hpp"

namespace zsmooth {

Trajectory minimize(const BlackBox& f, const SmoothingConfig& cfg, const Vector& x0,
                    const MinimizeOptions& options) {
  if (f.m != 1) {
    throw Error(ErrorCode::VectorOutputUnsupported,
                fmt::format("minimize needs a scalar objective, got m = {}", f.m));
  }
  if (!cfg.scale.is_scalar()) {
    throw Error(ErrorCode::MatrixScaleNotAllowed, "minimize supports a scalar scale only");
  }
  if (static_cast<std::size_t>(x0.size()) != f.n) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("x0 has {} entries, expected {}", x0.size(), f.n));
  }
  if (!(options.lr > 0.0) || !std::isfinite(options.lr)) {
    throw Error(ErrorCode::InvalidArgument, "lr must be > 0");
  }
  if (!(options.gamma_decay > 0.0 && options.gamma_decay <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma decay must be in (0, 1]");
  }

  SmoothingConfig step_cfg = cfg;
  Vector x = x0;
  Trajectory out;
  out.reserve(options.steps + 1);
  out.push_back({0, x, f(x)(0), step_cfg.scale.gamma()});
  for (std::size_t step = 0; step < options.steps; ++step) {
    const auto plan = make_plan(step_cfg, f.n, RngStream::derive_seed(options.seed, {step}));
    const Matrix g = SmoothingEstimator(f, step_cfg, plan, x, options.threads).jacobian();
    x -= options.lr * g.row(0).transpose();
    step_cfg.scale = Scale::scalar(step_cfg.scale.gamma() * options.gamma_decay);
    out.push_back({step + 1, x, f(x)(0), step_cfg.scale.gamma()});
  }
  return out;
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  const auto n = trajectory.empty() ? 0 : trajectory.front().x.size();
  out << "step";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  out << ",fx,gamma\n";
  for (const auto& p : trajectory) {
    out << p.step;
    for (double v : p.x) out << fmt::format(",{:.17g}", v);
    out << fmt::format(",{:.17g},{:.17g}\n", p.fx, p.gamma);
  }
}

}  // namespace zsmooth
