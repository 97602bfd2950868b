#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "paircomp/labeling.hpp"
#include "paircomp/picard.hpp"
#include "paircomp/rng.hpp"

using namespace paircomp;

namespace {

std::pair<GridFn<1>, ScalarGridFn<1>> midpoint_grids(int side, double amp = 0.0) {
  GridFn<1> xg = GridFn<1>::sized(side);
  ScalarGridFn<1> mg = ScalarGridFn<1>::sized(side);
  for (int c = 0; c < side; ++c) {
    const double s = (c + 0.5) / side;
    xg.v[c][0] = s;
    mg.v[c] = 1.0 + amp * std::sin(2.0 * std::numbers::pi * s);
  }
  return {xg, mg};
}

// Constant-in-time trajectory carrying the given grids at every dt node.
ContinuumTrajectory<1> constant_trajectory(const GridFn<1>& xg, const ScalarGridFn<1>& mg,
                                           double horizon, double dt) {
  ContinuumTrajectory<1> traj;
  traj.side = xg.side;
  const long steps = steps_for_horizon(dt, horizon);
  for (long k = 0; k <= steps; ++k) {
    traj.times.push_back(k * dt);
    traj.x.push_back(xg);
    traj.m.push_back(mg);
  }
  return traj;
}

}  // namespace

TEST_CASE("zero kernel fixes the initial positions in one sweep", "[picard]") {
  const auto zero = InfluenceKernel<1>::custom(1e-9, [](double) { return 0.0; });
  const auto [xg, mg] = midpoint_grids(8, 0.3);
  PicardConfig cfg;
  cfg.dt = 1e-2;
  const auto frozen = constant_trajectory(xg, mg, 0.2, cfg.dt);
  const auto result = picard_decoupled_x<1>(xg, frozen, cfg, zero, 0.2);
  for (const auto& wnd : result.windows) CHECK(wnd.iterations == 1);
  for (const auto& grids : result.trajectory.x)
    for (int c = 0; c < 8; ++c) CHECK(grids.v[c][0] == xg.v[c][0]);
}

TEST_CASE("frozen unit mass reproduces the mean-reversion closed form", "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const int K = 32;
  const auto [xg, mg] = midpoint_grids(K);
  PicardConfig cfg;
  cfg.dt = 1e-3;
  const double horizon = 0.5;
  const auto frozen = constant_trajectory(xg, mg, horizon, cfg.dt);
  const auto result = picard_decoupled_x<1>(xg, frozen, cfg, kernel, horizon);
  for (std::size_t k = 0; k < result.trajectory.times.size(); ++k) {
    const double decay = std::exp(-result.trajectory.times[k]);
    for (int c = 0; c < K; ++c) {
      const double expect = 0.5 + ((c + 0.5) / K - 0.5) * decay;
      CHECK(std::abs(result.trajectory.x[k].v[c][0] - expect) <= 1e-6);
    }
  }
}

TEST_CASE("position sweeps contract at the predicted rate", "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const auto [xg, mg] = midpoint_grids(16, 0.4);
  PicardConfig cfg;
  cfg.dt = 1e-3;
  const auto frozen = constant_trajectory(xg, mg, 0.5, cfg.dt);
  const auto result = picard_decoupled_x<1>(xg, frozen, cfg, kernel, 0.5);

  double m_sup = 0.0;
  for (double v : mg.v) m_sup = std::max(m_sup, v);
  for (const auto& wnd : result.windows) {
    const double window = wnd.t_end - wnd.t_begin;
    const double bound = 2.0 * kernel.lip * m_sup * window;
    CHECK(bound < 1.0);
    for (std::size_t s = 0; s + 1 < wnd.sweep_diffs.size(); ++s) {
      if (wnd.sweep_diffs[s] <= 100.0 * cfg.tolerance) break;
      CHECK(wnd.sweep_diffs[s + 1] <= bound * wnd.sweep_diffs[s] * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("constant frozen positions leave the masses untouched", "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const SignMap<1> sign;
  GridFn<1> xg{4, {{0.3}, {0.3}, {0.3}, {0.3}}};
  ScalarGridFn<1> mg{4, {1.2, 0.8, 1.1, 0.9}};
  PicardConfig cfg;
  cfg.dt = 1e-2;
  const auto frozen = constant_trajectory(xg, mg, 0.3, cfg.dt);
  const auto result = picard_decoupled_m<1>(mg, frozen, cfg, kernel, sign, 0.3);
  for (const auto& wnd : result.windows) CHECK(wnd.iterations == 1);
  for (const auto& grids : result.trajectory.m)
    for (int c = 0; c < 4; ++c) CHECK(grids.v[c] == mg.v[c]);
}

TEST_CASE("mass iterates keep the unit integral and the long-time envelope",
          "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const SignMap<1> sign;
  const int K = 16;
  const auto [xg, mg] = midpoint_grids(K, 0.5);
  IntegratorConfig icfg;
  icfg.record_every = 1;
  const double horizon = 0.25;
  const auto frozen = solve_direct<1>(xg, mg, icfg, kernel, sign, horizon);

  PicardConfig cfg;
  cfg.dt = icfg.dt;
  const auto result = picard_decoupled_m<1>(mg, frozen, cfg, kernel, sign, horizon);
  double x_sup = 0.0;
  for (const auto& g : frozen.x)
    for (const auto& v : g.v) x_sup = std::max(x_sup, norm(v));
  const double rate = 4.0 * kernel.lip * (x_sup + 1.0) * sign.sup_bound * horizon;
  const double m_bound = 2.0;
  for (std::size_t k = 0; k < result.trajectory.times.size(); ++k) {
    const auto& m = result.trajectory.m[k];
    CHECK(std::abs(grid_mean<1>(m) - 1.0) <= 1e-12);
    for (double v : m.v) {
      CHECK(v >= std::exp(-rate) / m_bound);
      CHECK(v <= m_bound * std::exp(rate));
    }
  }
}

TEST_CASE("an oversized explicit window is rejected", "[picard]") {
  // A strong kernel plus a long explicit window drives the first iterate
  // outside [1/(2M), 2M].
  const auto kernel = InfluenceKernel<1>::custom(20.0, [](double) { return 20.0; });
  const SignMap<1> sign;
  const auto [xg, mg] = midpoint_grids(8, 0.5);
  PicardConfig cfg;
  cfg.dt = 0.05;
  cfg.window = 10.0;
  const auto frozen = constant_trajectory(xg, mg, 10.0, cfg.dt);
  CHECK_THROWS_AS(picard_decoupled_m<1>(mg, frozen, cfg, kernel, sign, 10.0),
                  window_error);
}

TEST_CASE("coupled alternation with a zero kernel returns the initial data",
          "[picard]") {
  const auto zero = InfluenceKernel<1>::custom(1e-9, [](double) { return 0.0; });
  const SignMap<1> sign;
  const auto [xg, mg] = midpoint_grids(8, 0.3);
  PicardConfig cfg;
  cfg.dt = 1e-2;
  const auto result = solve_coupled_picard<1>(xg, mg, cfg, zero, sign, 0.2);
  for (std::size_t k = 0; k < result.trajectory.times.size(); ++k)
    for (int c = 0; c < 8; ++c) {
      CHECK(result.trajectory.x[k].v[c][0] == xg.v[c][0]);
      CHECK(result.trajectory.m[k].v[c] == mg.v[c]);
    }
}

TEST_CASE("coupled alternation agrees with the direct solver", "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const SignMap<1> sign;
  const int K = 16;
  const double horizon = 0.25;
  const auto [xg, mg] = midpoint_grids(K, 0.5);

  IntegratorConfig icfg;
  icfg.record_every = 1;
  const auto direct = solve_direct<1>(xg, mg, icfg, kernel, sign, horizon);

  PicardConfig cfg;
  cfg.dt = icfg.dt;
  const auto picard = solve_coupled_picard<1>(xg, mg, cfg, kernel, sign, horizon);

  double worst = 0.0;
  for (std::size_t k = 0; k < direct.times.size(); ++k)
    for (int c = 0; c < K; ++c) {
      worst = std::max(worst,
                       std::abs(direct.x[k].v[c][0] - picard.trajectory.x[k].v[c][0]));
      worst =
          std::max(worst, std::abs(direct.m[k].v[c] - picard.trajectory.m[k].v[c]));
    }
  CHECK(worst <= 1e-6);
  for (const auto& m : picard.trajectory.m)
    CHECK(std::abs(grid_mean<1>(m) - 1.0) <= 1e-10);

  // Alternation differences decay superlinearly: the ratio sequence shrinks.
  const auto& u = picard.outer_diffs;
  REQUIRE(u.size() >= 3);
  std::vector<double> ratios;
  for (std::size_t n = 0; n + 1 < u.size(); ++n) {
    if (u[n] <= 100.0 * cfg.tolerance) break;
    ratios.push_back(u[n + 1] / u[n]);
  }
  REQUIRE(ratios.size() >= 2);
  for (std::size_t n = 0; n + 1 < ratios.size(); ++n)
    CHECK(ratios[n + 1] <= ratios[n] * (1.0 + 1e-6));
}

TEST_CASE("coupled alternation matches the direct solver in two dimensions",
          "[picard]") {
  const auto kernel = InfluenceKernel<2>::linear_kernel();
  const SignMap<2> sign;
  GridFn<2> xg = GridFn<2>::sized(2);
  ScalarGridFn<2> mg = ScalarGridFn<2>::sized(2);
  for (std::size_t c = 0; c < 4; ++c) {
    xg.v[c] = cell_center<2>(c, 2);
    mg.v[c] = 1.0 + 0.2 * (c % 2 == 0 ? 1.0 : -1.0);
  }
  const double horizon = 0.1;
  IntegratorConfig icfg;
  icfg.record_every = 1;
  const auto direct = solve_direct<2>(xg, mg, icfg, kernel, sign, horizon);
  PicardConfig cfg;
  cfg.dt = icfg.dt;
  const auto picard = solve_coupled_picard<2>(xg, mg, cfg, kernel, sign, horizon);
  double worst = 0.0;
  for (std::size_t k = 0; k < direct.times.size(); ++k)
    for (std::size_t c = 0; c < 4; ++c) {
      worst = std::max(worst, norm(direct.x[k].v[c] - picard.trajectory.x[k].v[c]));
      worst = std::max(worst, std::abs(direct.m[k].v[c] - picard.trajectory.m[k].v[c]));
    }
  CHECK(worst <= 1e-6);
}

TEST_CASE("picard configuration contracts", "[picard]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const auto [xg, mg] = midpoint_grids(4);
  PicardConfig cfg;
  cfg.tolerance = 0.0;
  const auto frozen = constant_trajectory(xg, mg, 0.1, 1e-2);
  CHECK_THROWS_AS(picard_decoupled_x<1>(xg, frozen, cfg, kernel, 0.1), contract_error);

  PicardConfig ok;
  ok.dt = 1e-2;
  ContinuumTrajectory<1> sparse = frozen;
  sparse.times.pop_back();
  sparse.m.pop_back();
  sparse.x.pop_back();
  CHECK_THROWS_AS(picard_decoupled_x<1>(xg, sparse, ok, kernel, 0.1), contract_error);
}
