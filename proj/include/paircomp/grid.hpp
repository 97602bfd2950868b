#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/integrator.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

// ---------------------------------------------------------------------------
// Step functions on the uniform K^d grid over the unit cube: one value per
// cell, interpreted as the cell average. Cells are indexed row-major with the
// first axis fastest, matching the flat labeling used for particles.
// ---------------------------------------------------------------------------

template <int D>
std::size_t cell_count(int side) {
  std::size_t n = 1;
  for (int k = 0; k < D; ++k) n *= static_cast<std::size_t>(side);
  return n;
}

template <int D>
double cell_volume(int side) {
  return 1.0 / static_cast<double>(cell_count<D>(side));
}

template <int D>
struct GridFn {
  int side = 0;
  std::vector<Vec<D>> v;

  static GridFn sized(int side) {
    if (side < 1) throw contract_error("grid side must be >= 1");
    return {side, std::vector<Vec<D>>(cell_count<D>(side))};
  }
};

template <int D>
struct ScalarGridFn {
  int side = 0;
  std::vector<double> v;

  static ScalarGridFn sized(int side) {
    if (side < 1) throw contract_error("grid side must be >= 1");
    return {side, std::vector<double>(cell_count<D>(side))};
  }
};

template <int D>
void check_same_grid(const GridFn<D>& xg, const ScalarGridFn<D>& mg) {
  if (xg.side != mg.side || xg.v.size() != mg.v.size() ||
      xg.v.size() != cell_count<D>(xg.side))
    throw contract_error("grid resolution mismatch");
}

// Cell-measure-weighted mean of a scalar grid (the integral over the cube).
template <int D>
double grid_mean(const ScalarGridFn<D>& g) {
  return pairwise_sum(g.v.size(), [&](std::size_t i) { return g.v[i]; }) /
         static_cast<double>(g.v.size());
}

template <int D>
void validate_mass_grid(const ScalarGridFn<D>& g, double tol = 1e-6) {
  for (std::size_t i = 0; i < g.v.size(); ++i)
    if (!(g.v[i] > 0.0)) throw contract_error("mass grid must be positive everywhere");
  const double dev = std::abs(grid_mean<D>(g) - 1.0);
  if (dev > tol)
    throw contract_error("mass grid must have unit integral (deviation " +
                         std::to_string(dev) + ")");
}

// ---------------------------------------------------------------------------
// The mass functional Psi evaluated exactly for step functions: the double
// integral collapses to a sum over cell pairs with weight K^{-2d}. This is
// the literal formula and costs O(K^{2d}) per cell; the time-stepper uses the
// factorized route below, and the two are cross-checked in the tests.
// ---------------------------------------------------------------------------

template <int D>
double eval_Psi(std::size_t cell, const GridFn<D>& xg, const ScalarGridFn<D>& mg,
                const InfluenceKernel<D>& kernel, const SignMap<D>& sign) {
  check_same_grid(xg, mg);
  if (cell >= xg.v.size()) throw contract_error("cell index out of range");
  const std::size_t p = xg.v.size();
  const double w = cell_volume<D>(xg.side);
  const Vec<D> xs = xg.v[cell];
  const double acc = pairwise_sum(p, [&](std::size_t j) {
    const Vec<D> xj = xg.v[j];
    const Vec<D> s = sign(xs - xj);
    const Vec<D> inner = pairwise_sum_vec<D>(p, [&](std::size_t k) {
      return mg.v[k] * (kernel(xg.v[k] - xs) + kernel(xg.v[k] - xj));
    });
    return mg.v[j] * dot(inner, s);
  });
  return 0.5 * w * w * mg.v[cell] * acc;
}

// Factorized mass derivative for every cell at once: velocities first, then
// the pair sum, exactly as in the particle system.
template <int D>
ScalarGridFn<D> psi_grid(const GridFn<D>& xg, const ScalarGridFn<D>& mg,
                         const InfluenceKernel<D>& kernel, const SignMap<D>& sign,
                         int threads = 1) {
  check_same_grid(xg, mg);
  GridFn<D> vel = GridFn<D>::sized(xg.side);
  ScalarGridFn<D> out = ScalarGridFn<D>::sized(xg.side);
  rhs_positions_into<D>(xg.v, mg.v, kernel, vel.v, threads);
  rhs_masses_into<D>(xg.v, mg.v, vel.v, sign, out.v, threads);
  return out;
}

// Right-hand side of the grid system. Cell sums are exact for step
// functions, so this delegates to the particle kernels on the flat arrays:
// the resolution-K grid system IS the P = K^d particle system.
template <int D>
void grid_rhs(const GridFn<D>& xg, const ScalarGridFn<D>& mg,
              const InfluenceKernel<D>& kernel, const SignMap<D>& sign, GridFn<D>& dx,
              ScalarGridFn<D>& dm, int threads = 1) {
  check_same_grid(xg, mg);
  dx.side = xg.side;
  dx.v.resize(xg.v.size());
  dm.side = xg.side;
  dm.v.resize(xg.v.size());
  rhs_positions_into<D>(xg.v, mg.v, kernel, dx.v, threads);
  rhs_masses_into<D>(xg.v, mg.v, dx.v, sign, dm.v, threads);
}

template <int D>
std::pair<GridFn<D>, ScalarGridFn<D>> grid_rhs(const GridFn<D>& xg,
                                               const ScalarGridFn<D>& mg,
                                               const InfluenceKernel<D>& kernel,
                                               const SignMap<D>& sign, int threads = 1) {
  GridFn<D> dx;
  ScalarGridFn<D> dm;
  grid_rhs(xg, mg, kernel, sign, dx, dm, threads);
  return {std::move(dx), std::move(dm)};
}

// ---------------------------------------------------------------------------
// Direct time-stepping of the grid system.
// ---------------------------------------------------------------------------

template <int D>
struct ContinuumTrajectory {
  int side = 0;
  std::vector<double> times;
  std::vector<GridFn<D>> x;
  std::vector<ScalarGridFn<D>> m;

  std::size_t index_of(double t, double tol = 1e-9) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) <= tol) return k;
    throw contract_error("continuum trajectory is not recorded at t = " + std::to_string(t));
  }
};

// frozen: hold the mass grid fixed and evolve positions only (the decoupled
// position equation with a frozen mass profile).
enum class MassMode { coupled, frozen };

template <int D>
ContinuumTrajectory<D> solve_direct(const GridFn<D>& x0, const ScalarGridFn<D>& m0,
                                    const IntegratorConfig& cfg,
                                    const InfluenceKernel<D>& kernel,
                                    const SignMap<D>& sign, double horizon,
                                    MassMode mode = MassMode::coupled) {
  check_same_grid(x0, m0);
  validate_mass_grid<D>(m0);
  cfg.validate(horizon);
  if constexpr (D == 1) {
    for (std::size_t c = 0; c + 1 < x0.v.size(); ++c)
      if (!(x0.v[c][0] < x0.v[c + 1][0]))
        throw contract_error("initial position grid must be strictly increasing");
  }
  const long steps = steps_for_horizon(cfg.dt, horizon);

  ContinuumTrajectory<D> out;
  out.side = x0.side;
  std::vector<Vec<D>> x = x0.v;
  std::vector<double> m = m0.v;
  detail::StepWorkspace<D> w;
  const bool frozen = mode == MassMode::frozen;
  auto rhs = [&](const std::vector<Vec<D>>& xs, const std::vector<double>& ms,
                 std::vector<Vec<D>>& dxs, std::vector<double>& dms) {
    rhs_positions_into<D>(xs, ms, kernel, dxs, cfg.threads);
    if (frozen)
      std::fill(dms.begin(), dms.end(), 0.0);
    else
      rhs_masses_into<D>(xs, ms, dxs, sign, dms, cfg.threads);
  };

  auto record = [&](double t) {
    out.times.push_back(t);
    out.x.push_back(GridFn<D>{x0.side, x});
    out.m.push_back(ScalarGridFn<D>{x0.side, m});
  };

  record(0.0);
  for (long k = 1; k <= steps; ++k) {
    detail::advance_in_place<D>(x, m, cfg.dt, cfg.scheme, rhs, w);
    const double t = static_cast<double>(k) * cfg.dt;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(m[i] > 0.0))
        throw collapse_error("mass grid value " + std::to_string(i) +
                                 " collapsed at t = " + std::to_string(t),
                             i);
    if (k % cfg.record_every == 0 || k == steps) record(t);
  }
  return out;
}

}  // namespace paircomp
