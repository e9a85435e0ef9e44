#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace zsmooth {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seeded random stream with a platform-independent uniform transform.
// std::uniform_real_distribution is implementation-defined, so uniforms are
// built directly from the engine's 64-bit output.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  // Derives a stream from a master seed and a path of indices, e.g.
  // (master, cell, trial). Different paths give statistically independent
  // streams.
  static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);
  static std::uint64_t derive_seed(std::uint64_t master,
                                   std::initializer_list<std::uint64_t> path);

  // Uniform draw strictly inside (0, 1) on a 2^-53 grid.
  double uniform();

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace zsmooth
