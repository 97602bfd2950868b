#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/vec.hpp"

namespace paircomp {

// Row-major bijection between multi-indices in {1..N}^d and flat indices in
// {1..N^d}: sigma(i_1, ..., i_d) = i_1 + (i_2 - 1) N + ... + (i_d - 1) N^{d-1}.
// The first axis varies fastest, matching the flat storage of grids and
// particle arrays, so embedding a state into a grid is an identity copy.
class CubeLabeling {
 public:
  CubeLabeling(int dim, int side) : dim_(dim), side_(side) {
    if (dim < 1) throw contract_error("labeling dimension must be >= 1");
    if (side < 1) throw contract_error("labeling side must be >= 1");
    cells_ = 1;
    for (int k = 0; k < dim; ++k) cells_ *= static_cast<std::size_t>(side);
  }

  int dim() const { return dim_; }
  int side() const { return side_; }
  std::size_t cells() const { return cells_; }

  // Multi-index components are 1-based; the flat label is 1-based.
  std::size_t label(std::span<const int> multi) const {
    if (multi.size() != static_cast<std::size_t>(dim_))
      throw contract_error("multi-index has wrong length");
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (int k = 0; k < dim_; ++k) {
      if (multi[k] < 1 || multi[k] > side_)
        throw contract_error("multi-index component " + std::to_string(k + 1) +
                             " out of range");
      flat += static_cast<std::size_t>(multi[k] - 1) * stride;
      stride *= static_cast<std::size_t>(side_);
    }
    return flat + 1;
  }

  std::vector<int> unlabel(std::size_t flat) const {
    if (flat < 1 || flat > cells_) throw contract_error("flat index out of range");
    std::size_t rest = flat - 1;
    std::vector<int> multi(dim_);
    for (int k = 0; k < dim_; ++k) {
      multi[k] = static_cast<int>(rest % static_cast<std::size_t>(side_)) + 1;
      rest /= static_cast<std::size_t>(side_);
    }
    return multi;
  }

  // Lower corner of the cell Q_i, 0-based flat index.
  std::vector<double> cell_lower(std::size_t flat0) const {
    if (flat0 >= cells_) throw contract_error("flat index out of range");
    std::vector<double> lower(dim_);
    std::size_t rest = flat0;
    for (int k = 0; k < dim_; ++k) {
      lower[k] = static_cast<double>(rest % static_cast<std::size_t>(side_)) / side_;
      rest /= static_cast<std::size_t>(side_);
    }
    return lower;
  }

  // "i1:i2:...:id" rendering for CSV output.
  std::string multi_string(std::size_t flat0) const {
    const std::vector<int> multi = unlabel(flat0 + 1);
    std::string out;
    for (int k = 0; k < dim_; ++k) {
      if (k) out += ':';
      out += std::to_string(multi[k]);
    }
    return out;
  }

 private:
  int dim_;
  int side_;
  std::size_t cells_;
};

// Static-dimension index helpers used by the grid code.
template <int D>
std::array<int, D> cell_multi0(std::size_t flat0, int side) {
  std::array<int, D> multi{};
  std::size_t rest = flat0;
  for (int k = 0; k < D; ++k) {
    multi[k] = static_cast<int>(rest % static_cast<std::size_t>(side));
    rest /= static_cast<std::size_t>(side);
  }
  return multi;
}

template <int D>
std::size_t cell_flat0(const std::array<int, D>& multi0, int side) {
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (int k = 0; k < D; ++k) {
    flat += static_cast<std::size_t>(multi0[k]) * stride;
    stride *= static_cast<std::size_t>(side);
  }
  return flat;
}

template <int D>
Vec<D> cell_center(std::size_t flat0, int side) {
  const std::array<int, D> multi = cell_multi0<D>(flat0, side);
  Vec<D> c;
  for (int k = 0; k < D; ++k)
    c[k] = (static_cast<double>(multi[k]) + 0.5) / static_cast<double>(side);
  return c;
}

}  // namespace paircomp
