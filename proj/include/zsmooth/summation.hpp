#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace zsmooth::detail {

// Pairwise summation of per-sample terms into `out`. `add(i, out)` adds term i.
// The split points are always even, so antithetic partners (rows 2i, 2i+1)
// meet in the same leaf and cancel exactly. The result depends only on the
// terms, never on evaluation order.
template <class AddTerm>
void pairwise_sum(std::size_t begin, std::size_t end, Eigen::ArrayXd& out, const AddTerm& add) {
  constexpr std::size_t kLeaf = 16;
  if (end - begin <= kLeaf) {
    out.setZero();
    for (std::size_t i = begin; i < end; ++i) add(i, out);
    return;
  }
  const std::size_t half = ((end - begin) / 2) & ~std::size_t{1};
  pairwise_sum(begin, begin + half, out, add);
  Eigen::ArrayXd right(out.size());
  pairwise_sum(begin + half, end, right, add);
  out += right;
}

}  // namespace zsmooth::detail
