#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace zsmooth {

// Dense row-major tensor for the rank-3 and rank-4 gradient blocks.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)),
        data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                              std::multiplies<>{}),
              0.0) {}

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  template <class... Idx>
  double& operator()(Idx... idx) noexcept {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <class... Idx>
  double operator()(Idx... idx) const noexcept {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  bool all_zero() const noexcept {
    for (double v : data_)
      if (v != 0.0) return false;
    return true;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const noexcept {
    std::size_t off = 0;
    std::size_t d = 0;
    for (std::size_t i : idx) off = off * shape_[d++] + i;
    return off;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace zsmooth
