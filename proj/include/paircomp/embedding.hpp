#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/grid.hpp"
#include "paircomp/labeling.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

// ---------------------------------------------------------------------------
// Cell-average projection of initial data: x_i = N^d int_{Q_i} x0, and the
// same for m0. Composite 5-point Gauss-Legendre per axis; panels subdivide
// each cell axis for non-polynomial data.
// ---------------------------------------------------------------------------

struct QuadratureConfig {
  int panels = 4;

  void validate() const {
    if (panels < 1) throw contract_error("quadrature panels must be >= 1");
  }
};

namespace detail {

// Nodes/weights on [0,1] whose weights sum to 1, so tensor sums yield the
// average over the cell directly.
inline void unit_axis_rule(int panels, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  static constexpr std::array<double, 5> kNode = {
      -0.9061798459386639928, -0.5384693101056830910, 0.0,
      0.5384693101056830910, 0.9061798459386639928};
  static constexpr std::array<double, 5> kWeight = {
      0.2369268850561890875, 0.4786286704993664680, 0.5688888888888888889,
      0.4786286704993664680, 0.2369268850561890875};
  nodes.clear();
  weights.clear();
  for (int p = 0; p < panels; ++p)
    for (int g = 0; g < 5; ++g) {
      nodes.push_back((p + 0.5 + 0.5 * kNode[g]) / panels);
      weights.push_back(0.5 * kWeight[g] / panels);
    }
}

}  // namespace detail

template <int D>
DiscreteState<D> project_initial(const std::function<Vec<D>(const Vec<D>&)>& x0,
                                 const std::function<double(const Vec<D>&)>& m0, int N,
                                 const QuadratureConfig& quad = {}) {
  if (N < 1) throw contract_error("resolution must be >= 1");
  quad.validate();
  std::vector<double> nodes, weights;
  detail::unit_axis_rule(quad.panels, nodes, weights);
  const std::size_t q = nodes.size();
  std::size_t points = 1;
  for (int k = 0; k < D; ++k) points *= q;

  const std::size_t cells = cell_count<D>(N);
  const double h = 1.0 / static_cast<double>(N);
  std::vector<Vec<D>> xs(cells);
  std::vector<double> ms(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::array<int, D> multi = cell_multi0<D>(cell, N);
    Vec<D> xacc = pairwise_sum_vec<D>(points, [&](std::size_t pt) {
      std::size_t rest = pt;
      Vec<D> s;
      double w = 1.0;
      for (int k = 0; k < D; ++k) {
        const std::size_t a = rest % q;
        rest /= q;
        s[k] = (multi[k] + nodes[a]) * h;
        w *= weights[a];
      }
      return w * x0(s);
    });
    double macc = pairwise_sum(points, [&](std::size_t pt) {
      std::size_t rest = pt;
      Vec<D> s;
      double w = 1.0;
      for (int k = 0; k < D; ++k) {
        const std::size_t a = rest % q;
        rest /= q;
        s[k] = (multi[k] + nodes[a]) * h;
        w *= weights[a];
      }
      return w * m0(s);
    });
    xs[cell] = xacc;
    ms[cell] = macc;
  }
  const double dev =
      std::abs(pairwise_sum(cells, [&](std::size_t i) { return ms[i]; }) /
                   static_cast<double>(cells) -
               1.0);
  if (dev > 1e-8)
    throw solver_error("projected masses deviate from unit mean by " +
                       std::to_string(dev) + "; refine the quadrature");
  return make_state<D>(std::move(xs), std::move(ms));
}

// ---------------------------------------------------------------------------
// Riemann-sum embedding: the step functions carrying particle values on the
// labeling cells. With the row-major labeling this is an identity copy.
// ---------------------------------------------------------------------------

template <int D>
std::pair<GridFn<D>, ScalarGridFn<D>> riemann_embed(const DiscreteState<D>& state,
                                                    const CubeLabeling& labeling) {
  if (labeling.dim() != D || labeling.side() != state.side ||
      labeling.cells() != state.count())
    throw contract_error("labeling does not match the state");
  GridFn<D> xg{state.side, state.positions};
  ScalarGridFn<D> mg{state.side, state.masses};
  return {std::move(xg), std::move(mg)};
}

template <int D>
std::pair<GridFn<D>, ScalarGridFn<D>> riemann_embed(const DiscreteState<D>& state) {
  return riemann_embed(state, CubeLabeling(D, state.side));
}

// Pointwise evaluation of a step function at s in the unit cube.
template <int D>
const Vec<D>& value_at(const GridFn<D>& g, const Vec<D>& s) {
  std::array<int, D> multi{};
  for (int k = 0; k < D; ++k) {
    const int i = static_cast<int>(std::floor(s[k] * g.side));
    multi[k] = std::clamp(i, 0, g.side - 1);
  }
  return g.v[cell_flat0<D>(multi, g.side)];
}

template <int D>
double value_at(const ScalarGridFn<D>& g, const Vec<D>& s) {
  std::array<int, D> multi{};
  for (int k = 0; k < D; ++k) {
    const int i = static_cast<int>(std::floor(s[k] * g.side));
    multi[k] = std::clamp(i, 0, g.side - 1);
  }
  return g.v[cell_flat0<D>(multi, g.side)];
}

// ---------------------------------------------------------------------------
// Convergence functionals: distances between an embedded pair at resolution
// N and a reference pair at resolution K (K a multiple of N), computed
// exactly as cell sums on the fine grid. Squared L2 in d = 1, plain L1 in
// d > 1 (the L2 route breaks down at d = 2).
// ---------------------------------------------------------------------------

enum class NormKind { l2_squared, l1 };

constexpr NormKind norm_kind_for_dim(int dim) {
  return dim == 1 ? NormKind::l2_squared : NormKind::l1;
}

namespace detail {

template <int D>
std::size_t coarse_cell(std::size_t fine_flat0, int fine_side, int ratio) {
  const std::array<int, D> multi = cell_multi0<D>(fine_flat0, fine_side);
  std::array<int, D> coarse{};
  for (int k = 0; k < D; ++k) coarse[k] = multi[k] / ratio;
  return cell_flat0<D>(coarse, fine_side / ratio);
}

}  // namespace detail

template <int D>
std::pair<double, double> xi_zeta(const GridFn<D>& xN, const ScalarGridFn<D>& mN,
                                  const GridFn<D>& xK, const ScalarGridFn<D>& mK) {
  check_same_grid(xN, mN);
  check_same_grid(xK, mK);
  if (xK.side % xN.side != 0)
    throw contract_error("reference resolution must be a multiple of the embedded one");
  const int ratio = xK.side / xN.side;
  const std::size_t fine = xK.v.size();
  const double vol = cell_volume<D>(xK.side);

  double xi, zeta;
  if constexpr (D == 1) {
    xi = vol * pairwise_sum(fine, [&](std::size_t c) {
           return norm_sq(xN.v[detail::coarse_cell<D>(c, xK.side, ratio)] - xK.v[c]);
         });
    zeta = vol * pairwise_sum(fine, [&](std::size_t c) {
             const double d = mN.v[detail::coarse_cell<D>(c, xK.side, ratio)] - mK.v[c];
             return d * d;
           });
  } else {
    xi = vol * pairwise_sum(fine, [&](std::size_t c) {
           return norm(xN.v[detail::coarse_cell<D>(c, xK.side, ratio)] - xK.v[c]);
         });
    zeta = vol * pairwise_sum(fine, [&](std::size_t c) {
             return std::abs(mN.v[detail::coarse_cell<D>(c, xK.side, ratio)] - mK.v[c]);
           });
  }
  return {xi, zeta};
}

// ---------------------------------------------------------------------------
// g_N residual: the gap between the mass functional and its coarse cell
// average along a reference solution. Vanishes as N grows by Lebesgue
// differentiation; reported in the same norm as xi/zeta.
// ---------------------------------------------------------------------------

template <int D>
double gn_from_psi(const ScalarGridFn<D>& psi, int N) {
  if (N < 1 || psi.side % N != 0)
    throw contract_error("coarse resolution must divide the reference one");
  const int K = psi.side;
  const int ratio = K / N;
  const std::size_t fine = psi.v.size();
  std::size_t block = 1;
  for (int k = 0; k < D; ++k) block *= static_cast<std::size_t>(ratio);

  // Average per coarse cell, enumerated in fixed order.
  std::vector<double> avg(cell_count<D>(N));
  for (std::size_t nc = 0; nc < avg.size(); ++nc) {
    const std::array<int, D> base = cell_multi0<D>(nc, N);
    avg[nc] = pairwise_sum(block, [&](std::size_t b) {
                std::array<int, D> sub{};
                std::size_t rest = b;
                for (int k = 0; k < D; ++k) {
                  sub[k] = base[k] * ratio + static_cast<int>(rest % ratio);
                  rest /= static_cast<std::size_t>(ratio);
                }
                return psi.v[cell_flat0<D>(sub, K)];
              }) /
              static_cast<double>(block);
  }

  const double vol = cell_volume<D>(K);
  if constexpr (D == 1) {
    return vol * pairwise_sum(fine, [&](std::size_t c) {
             const double d = avg[detail::coarse_cell<D>(c, K, ratio)] - psi.v[c];
             return d * d;
           });
  } else {
    return vol * pairwise_sum(fine, [&](std::size_t c) {
             return std::abs(avg[detail::coarse_cell<D>(c, K, ratio)] - psi.v[c]);
           });
  }
}

template <int D>
double gn_diagnostic(const ContinuumTrajectory<D>& reference, int N, double t,
                     const InfluenceKernel<D>& kernel, const SignMap<D>& sign,
                     int threads = 1) {
  const std::size_t k = reference.index_of(t);
  const ScalarGridFn<D> psi =
      psi_grid<D>(reference.x[k], reference.m[k], kernel, sign, threads);
  return gn_from_psi<D>(psi, N);
}

// ---------------------------------------------------------------------------
// Per-refinement convergence series.
// ---------------------------------------------------------------------------

struct ConvergenceSeries {
  int refinement = 0;  // N
  std::vector<double> times;
  std::vector<double> xi;
  std::vector<double> zeta;
  std::vector<double> gn;
  std::vector<double> w1;

  double sup_xi_zeta() const {
    double v = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) v = std::max(v, xi[k] + zeta[k]);
    return v;
  }
  double sup_gn() const {
    double v = 0.0;
    for (double g : gn) v = std::max(v, g);
    return v;
  }
};

struct ConvergenceReport {
  int dim = 1;
  NormKind norm_kind = NormKind::l2_squared;
  int reference_side = 0;
  std::uint64_t seed = 0;
  std::vector<ConvergenceSeries> levels;

  bool sup_strictly_decreasing() const {
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
      if (!(levels[i + 1].sup_xi_zeta() < levels[i].sup_xi_zeta())) return false;
    return true;
  }
  bool gn_strictly_decreasing() const {
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
      if (!(levels[i + 1].sup_gn() < levels[i].sup_gn())) return false;
    return true;
  }
};

}  // namespace paircomp
