#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "paircomp/embedding.hpp"
#include "paircomp/integrator.hpp"
#include "paircomp/labeling.hpp"
#include "paircomp/rng.hpp"

using namespace paircomp;

namespace {

constexpr double tau = 2.0 * std::numbers::pi;

Vec<1> ramp(const Vec<1>& s) { return s; }
double sine_mass(const Vec<1>& s) { return 1.0 + 0.5 * std::sin(tau * s[0]); }

}  // namespace

TEST_CASE("labeling is the row-major bijection", "[embedding]") {
  const CubeLabeling line(1, 5);
  for (int i = 1; i <= 5; ++i) {
    CHECK(line.label(std::array<int, 1>{i}) == static_cast<std::size_t>(i));
    CHECK(line.unlabel(i) == std::vector<int>{i});
  }

  const CubeLabeling square(2, 2);
  CHECK(square.label(std::array<int, 2>{1, 1}) == 1);
  CHECK(square.label(std::array<int, 2>{2, 1}) == 2);
  CHECK(square.label(std::array<int, 2>{1, 2}) == 3);
  CHECK(square.label(std::array<int, 2>{2, 2}) == 4);

  const CubeLabeling hyper(4, 3);
  for (std::size_t flat = 1; flat <= hyper.cells(); ++flat) {
    const auto multi = hyper.unlabel(flat);
    CHECK(hyper.label(multi) == flat);
  }

  CHECK_THROWS_AS(square.label(std::array<int, 2>{0, 1}), contract_error);
  CHECK_THROWS_AS(square.label(std::array<int, 2>{3, 1}), contract_error);
  CHECK_THROWS_AS(square.label(std::array<int, 1>{1}), contract_error);
  CHECK_THROWS_AS(square.unlabel(5), contract_error);
  CHECK(square.multi_string(2) == "1:2");
}

TEST_CASE("cell-average projection of linear and constant data", "[embedding]") {
  const auto state = project_initial<1>(ramp, [](const Vec<1>&) { return 1.0; }, 4);
  const std::array<double, 4> midpoints = {0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 4; ++i) {
    CHECK(state.positions[i][0] == Catch::Approx(midpoints[i]).margin(1e-14));
    CHECK(state.masses[i] == Catch::Approx(1.0).margin(1e-14));
  }
}

TEST_CASE("cell-average projection of the sine mass", "[embedding]") {
  const auto state = project_initial<1>(ramp, sine_mass, 2);
  CHECK(state.masses[0] == Catch::Approx(1.0 + 1.0 / std::numbers::pi).margin(1e-12));
  CHECK(state.masses[1] == Catch::Approx(1.0 - 1.0 / std::numbers::pi).margin(1e-12));
  CHECK(std::abs(mean_mass(state) - 1.0) <= 1e-10);
}

TEST_CASE("Riemann embedding round trip", "[embedding]") {
  const auto state = project_initial<1>(ramp, sine_mass, 4);
  const auto [xg, mg] = riemann_embed<1>(state);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(xg.v[c][0] == state.positions[c][0]);
    CHECK(mg.v[c] == state.masses[c]);
  }
  // s = 0.3 lies in the second of four cells.
  CHECK(value_at<1>(xg, Vec<1>{0.3})[0] == state.positions[1][0]);

  const auto two = project_initial<1>(ramp, [](const Vec<1>&) { return 1.0; }, 2);
  const auto [x2, m2] = riemann_embed<1>(two);
  CHECK(x2.v[0][0] == Catch::Approx(0.25).margin(1e-14));
  CHECK(x2.v[1][0] == Catch::Approx(0.75).margin(1e-14));

  CHECK_THROWS_AS(riemann_embed<1>(state, CubeLabeling(1, 5)), contract_error);
}

TEST_CASE("xi and zeta on hand-checkable cases", "[embedding]") {
  GridFn<1> x2{2, {{0.25}, {0.75}}};
  ScalarGridFn<1> m2{2, {1.0, 1.0}};
  const auto [xi_same, zeta_same] = xi_zeta<1>(x2, m2, x2, m2);
  CHECK(xi_same == 0.0);
  CHECK(zeta_same == 0.0);

  // Constant offset delta integrates to delta^2.
  const double delta = 0.3;
  GridFn<1> shifted{2, {{0.25 + delta}, {0.75 + delta}}};
  const auto [xi_off, zeta_off] = xi_zeta<1>(shifted, m2, x2, m2);
  CHECK(xi_off == Catch::Approx(delta * delta).margin(1e-15));
  CHECK(zeta_off == 0.0);

  // x(s) = s against its two-cell projection: the exact integral is 1/48.
  const int K = 2048;
  GridFn<1> fine = GridFn<1>::sized(K);
  ScalarGridFn<1> fine_m = ScalarGridFn<1>::sized(K);
  for (int c = 0; c < K; ++c) {
    fine.v[c][0] = (c + 0.5) / K;
    fine_m.v[c] = 1.0;
  }
  const auto [xi, zeta] = xi_zeta<1>(x2, m2, fine, fine_m);
  CHECK(xi == Catch::Approx(1.0 / 48.0).margin(1e-6));
  CHECK(zeta == 0.0);

  GridFn<1> x3{3, {{0.1}, {0.2}, {0.3}}};
  ScalarGridFn<1> m3{3, {1.0, 1.0, 1.0}};
  CHECK_THROWS_AS(xi_zeta<1>(x3, m3, fine, fine_m), contract_error);
}

TEST_CASE("xi and zeta use plain L1 norms in two dimensions", "[embedding]") {
  GridFn<2> coarse{1, {{0.0, 0.0}}};
  ScalarGridFn<2> coarse_m{1, {1.0}};
  GridFn<2> fine = GridFn<2>::sized(2);
  ScalarGridFn<2> fine_m = ScalarGridFn<2>::sized(2);
  for (int c = 0; c < 4; ++c) {
    fine.v[c] = {c == 0 ? 3.0 : 0.0, c == 0 ? 4.0 : 0.0};
    fine_m.v[c] = c == 0 ? 1.4 : (c == 1 ? 0.6 : 1.0);
  }
  const auto [xi, zeta] = xi_zeta<2>(coarse, coarse_m, fine, fine_m);
  CHECK(xi == Catch::Approx(5.0 / 4.0).margin(1e-15));    // |(3,4)| / 4 cells
  CHECK(zeta == Catch::Approx(0.2).margin(1e-15));        // (0.4 + 0.4) / 4
}

TEST_CASE("g_N vanishes exactly on coarse-constant references", "[embedding]") {
  ScalarGridFn<1> psi = ScalarGridFn<1>::sized(8);
  for (int c = 0; c < 8; ++c) psi.v[c] = (c / 2) * 0.25;  // constant on 4 blocks
  CHECK(gn_from_psi<1>(psi, 8) == 0.0);
  CHECK(gn_from_psi<1>(psi, 4) == 0.0);
  CHECK(gn_from_psi<1>(psi, 2) > 0.0);
  CHECK_THROWS_AS(gn_from_psi<1>(psi, 3), contract_error);
}

TEST_CASE("g_N decreases under refinement on a smooth reference", "[embedding]") {
  const auto kernel = InfluenceKernel<1>::linear_kernel();
  const SignMap<1> sign;
  const int K = 64;
  const auto state = project_initial<1>(ramp, sine_mass, K);
  const auto [xg, mg] = riemann_embed<1>(state);
  IntegratorConfig cfg;
  cfg.record_every = 100;
  const auto traj = solve_direct<1>(xg, mg, cfg, kernel, sign, 0.2);

  double prev = -1.0;
  bool first = true;
  for (int n : {2, 4, 8, 16}) {
    const double g = gn_diagnostic<1>(traj, n, 0.2, kernel, sign);
    if (!first) CHECK(g < prev);
    prev = g;
    first = false;
  }
  CHECK(gn_diagnostic<1>(traj, K, 0.2, kernel, sign) == 0.0);
}

TEST_CASE("projection then embedding converges to the data", "[embedding]") {
  const auto x0 = [](const Vec<1>& s) { return Vec<1>{std::atan(4.0 * (s[0] - 0.5))}; };
  const int K = 160;
  const auto reference = project_initial<1>(x0, sine_mass, K);
  const auto [xk, mk] = riemann_embed<1>(reference);

  double prev = -1.0;
  bool first = true;
  for (int n : {2, 4, 8, 16, 32}) {
    const auto state = project_initial<1>(x0, sine_mass, n);
    const auto [xn, mn] = riemann_embed<1>(state);
    const auto [xi, zeta] = xi_zeta<1>(xn, mn, xk, mk);
    if (!first) CHECK(xi + zeta < prev);
    prev = xi + zeta;
    first = false;
  }
}

TEST_CASE("embedded trajectories differentiate to the grid RHS", "[embedding]") {
  // Central differences of the embedded particle flow against the grid RHS
  // at matching resolution: O(dt^2) agreement, ratio about 4 when halving.
  const auto kernel = InfluenceKernel<1>::saturating_kernel();
  const SignMap<1> sign;
  ModelParams params;
  params.horizon = 0.02;

  auto worst_gap = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.record_every = 1;
    const auto initial = project_initial<1>(ramp, sine_mass, 8);
    const auto sim = simulate<1>(initial, cfg, kernel, sign, params);
    const std::size_t mid = sim.trajectory.times.size() / 2;
    const auto [xm, mm] = riemann_embed<1>(sim.trajectory.states[mid - 1]);
    const auto [xc, mc] = riemann_embed<1>(sim.trajectory.states[mid]);
    const auto [xp, mp] = riemann_embed<1>(sim.trajectory.states[mid + 1]);
    const auto [dx, dm] = grid_rhs<1>(xc, mc, kernel, sign);
    double worst = 0.0;
    for (int c = 0; c < 8; ++c) {
      const double fd_x = (xp.v[c][0] - xm.v[c][0]) / (2.0 * dt);
      const double fd_m = (mp.v[c] - mm.v[c]) / (2.0 * dt);
      worst = std::max(worst, std::abs(fd_x - dx.v[c][0]));
      worst = std::max(worst, std::abs(fd_m - dm.v[c]));
    }
    return worst;
  };

  const double e1 = worst_gap(2e-3);
  const double e2 = worst_gap(1e-3);
  CHECK(e1 <= 1e-4);
  CHECK(e1 / e2 == Catch::Approx(4.0).margin(1.5));
}

TEST_CASE("projected masses keep unit mean at depth", "[embedding]") {
  for (int n : {2, 8, 32}) {
    const auto state = project_initial<1>(ramp, sine_mass, n);
    CHECK(std::abs(mean_mass(state) - 1.0) <= 1e-10);
  }
}

TEST_CASE("projection rejects data without unit mass", "[embedding]") {
  CHECK_THROWS_AS(project_initial<1>(ramp, [](const Vec<1>&) { return 2.0; }, 4),
                  solver_error);
}

TEST_CASE("two-dimensional projection averages per cube", "[embedding]") {
  const auto x0 = [](const Vec<2>& s) { return s; };
  const auto m0 = [](const Vec<2>&) { return 1.0; };
  const auto state = project_initial<2>(x0, m0, 2);
  REQUIRE(state.count() == 4);
  // Row-major: first axis fastest, so cell 1 is (2,1) with center (3/4, 1/4).
  CHECK(state.positions[1][0] == Catch::Approx(0.75).margin(1e-14));
  CHECK(state.positions[1][1] == Catch::Approx(0.25).margin(1e-14));
}
