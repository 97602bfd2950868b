#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace paircomp {

// Point/vector in R^d with the dimension fixed at compile time.
template <int D>
using Vec = std::array<double, D>;

template <int D>
constexpr Vec<D> zero_vec() {
  return Vec<D>{};
}

// Arithmetic is defined on std::array directly (size_t extent) so template
// deduction works for Vec<D> arguments. These live in this namespace, not
// std, so they are visible to the library and to code using it wholesale.

template <std::size_t N>
inline std::array<double, N> operator+(std::array<double, N> a,
                                       const std::array<double, N>& b) {
  for (std::size_t k = 0; k < N; ++k) a[k] += b[k];
  return a;
}

template <std::size_t N>
inline std::array<double, N> operator-(std::array<double, N> a,
                                       const std::array<double, N>& b) {
  for (std::size_t k = 0; k < N; ++k) a[k] -= b[k];
  return a;
}

template <std::size_t N>
inline std::array<double, N> operator-(std::array<double, N> a) {
  for (std::size_t k = 0; k < N; ++k) a[k] = -a[k];
  return a;
}

template <std::size_t N>
inline std::array<double, N> operator*(double c, std::array<double, N> a) {
  for (std::size_t k = 0; k < N; ++k) a[k] *= c;
  return a;
}

template <std::size_t N>
inline std::array<double, N>& operator+=(std::array<double, N>& a,
                                         const std::array<double, N>& b) {
  for (std::size_t k = 0; k < N; ++k) a[k] += b[k];
  return a;
}

template <std::size_t N>
inline double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s += a[k] * b[k];
  return s;
}

template <std::size_t N>
inline double norm_sq(const std::array<double, N>& a) {
  return dot(a, a);
}

template <std::size_t N>
inline double norm(const std::array<double, N>& a) {
  if constexpr (N == 1) return std::abs(a[0]);
  return std::sqrt(norm_sq(a));
}

template <std::size_t N>
inline bool all_finite(const std::array<double, N>& a) {
  for (std::size_t k = 0; k < N; ++k)
    if (!std::isfinite(a[k])) return false;
  return true;
}

}  // namespace paircomp
