#pragma once

#include <cstddef>

#include "paircomp/vec.hpp"

namespace paircomp {

// Deterministic pairwise reduction of term(lo), ..., term(hi-1) with a fixed
// ascending-index association. The association never depends on the thread
// count or the platform, so sums are bit-for-bit repeatable, and the tree
// shape keeps rounding error at O(log n) ulps instead of O(n).

namespace detail {
constexpr std::size_t kReduceLeaf = 8;
}

template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
  const std::size_t n = hi - lo;
  if (n <= detail::kReduceLeaf) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

template <class F>
double pairwise_sum(std::size_t n, F&& term) {
  return pairwise_sum(std::size_t{0}, n, term);
}

template <int D, class F>
Vec<D> pairwise_sum_vec(std::size_t lo, std::size_t hi, F&& term) {
  const std::size_t n = hi - lo;
  if (n <= detail::kReduceLeaf) {
    Vec<D> s = zero_vec<D>();
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum_vec<D>(lo, mid, term) + pairwise_sum_vec<D>(mid, hi, term);
}

template <int D, class F>
Vec<D> pairwise_sum_vec(std::size_t n, F&& term) {
  return pairwise_sum_vec<D>(std::size_t{0}, n, term);
}

}  // namespace paircomp
