#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/grid.hpp"

namespace paircomp {

// ---------------------------------------------------------------------------
// Fixed-point solvers for the grid system, mirroring the contraction
// argument: integrate the right-hand side in time (composite trapezoid on
// the dt grid), iterate to a fixed point on a short window, chain windows to
// cover [0, T]. The direct time-stepper solves the same equations and serves
// as the cross-check.
// ---------------------------------------------------------------------------

struct PicardConfig {
  double window = 0.0;      // window length; 0 = derive from the contraction bounds
  double tolerance = 1e-10; // sup-difference between successive sweeps
  int max_iterations = 200; // per window (and outer alternation budget)
  double dt = 1e-3;         // time-quadrature grid
  int threads = 1;

  void validate() const {
    if (!(tolerance > 0.0)) throw contract_error("tolerance must be positive");
    if (!(dt > 0.0)) throw contract_error("dt must be positive");
    if (max_iterations < 1) throw contract_error("max_iterations must be >= 1");
    if (window < 0.0) throw contract_error("window must be >= 0");
  }
};

struct WindowStats {
  double t_begin = 0.0;
  double t_end = 0.0;
  int iterations = 0;
  std::vector<double> sweep_diffs;  // successive-iterate differences, in order
};

template <int D>
struct PicardResult {
  ContinuumTrajectory<D> trajectory;  // dense on the dt grid
  std::vector<WindowStats> windows;
};

namespace detail {

template <int D>
void check_dense_nodes(const ContinuumTrajectory<D>& traj, long steps, double dt,
                       bool need_x, bool need_m) {
  if (traj.times.size() != static_cast<std::size_t>(steps + 1))
    throw contract_error("frozen trajectory must be dense on the quadrature grid");
  for (long k = 0; k <= steps; ++k)
    if (std::abs(traj.times[k] - static_cast<double>(k) * dt) > 1e-9)
      throw contract_error("frozen trajectory nodes must lie on the dt grid");
  if (need_x && traj.x.size() != traj.times.size())
    throw contract_error("frozen trajectory is missing position grids");
  if (need_m && traj.m.size() != traj.times.size())
    throw contract_error("frozen trajectory is missing mass grids");
}

inline long window_steps(double window, double dt, long remaining) {
  // Cap before flooring: an unbounded auto window must not overflow the cast.
  const double capped = std::min(window, static_cast<double>(remaining) * dt);
  const long n = static_cast<long>(std::floor(capped / dt + 1e-9));
  return std::clamp(n, long{1}, remaining);
}

}  // namespace detail

// Position equation with a frozen mass trajectory: fixed point of
//   x -> x0 + int_0^t int m_bar(tau, s*) a(x(tau, s*) - x(tau, s)) ds* dtau.
// The automatic window keeps 2 L ||m_bar|| T_w <= 1/2 per sweep.
template <int D>
PicardResult<D> picard_decoupled_x(const GridFn<D>& x0,
                                   const ContinuumTrajectory<D>& frozen_m,
                                   const PicardConfig& cfg,
                                   const InfluenceKernel<D>& kernel, double horizon) {
  cfg.validate();
  const long steps = steps_for_horizon(cfg.dt, horizon);
  detail::check_dense_nodes<D>(frozen_m, steps, cfg.dt, false, true);
  if (frozen_m.m.front().side != x0.side) throw contract_error("grid resolution mismatch");
  const std::size_t cells = x0.v.size();

  double m_sup = 0.0;
  for (const auto& g : frozen_m.m)
    for (double v : g.v) m_sup = std::max(m_sup, v);
  const double auto_window = 1.0 / (4.0 * kernel.lip * std::max(m_sup, 1e-300));
  const double window = cfg.window > 0.0 ? cfg.window : auto_window;

  std::vector<std::vector<Vec<D>>> xs(steps + 1, x0.v);
  std::vector<std::vector<Vec<D>>> rhs(steps + 1, std::vector<Vec<D>>(cells));
  std::vector<Vec<D>> integral(cells), candidate(cells);

  PicardResult<D> result;
  long k0 = 0;
  while (k0 < steps) {
    const long k1 = k0 + detail::window_steps(window, cfg.dt, steps - k0);
    WindowStats stats;
    stats.t_begin = static_cast<double>(k0) * cfg.dt;
    stats.t_end = static_cast<double>(k1) * cfg.dt;
    for (long k = k0 + 1; k <= k1; ++k) xs[k] = xs[k0];

    bool converged = false;
    for (int sweep = 0; sweep < cfg.max_iterations; ++sweep) {
      for (long l = k0; l <= k1; ++l)
        rhs_positions_into<D>(xs[l], frozen_m.m[l].v, kernel, rhs[l], cfg.threads);
      std::fill(integral.begin(), integral.end(), zero_vec<D>());
      double diff = 0.0;
      for (long k = k0 + 1; k <= k1; ++k) {
        for (std::size_t c = 0; c < cells; ++c) {
          integral[c] += (0.5 * cfg.dt) * (rhs[k - 1][c] + rhs[k][c]);
          candidate[c] = xs[k0][c] + integral[c];
          diff = std::max(diff, norm(candidate[c] - xs[k][c]));
        }
        xs[k] = candidate;
      }
      stats.sweep_diffs.push_back(diff);
      stats.iterations = sweep + 1;
      if (diff < cfg.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw solver_error("position fixed point did not converge on window [" +
                         std::to_string(stats.t_begin) + ", " +
                         std::to_string(stats.t_end) + "]");
    result.windows.push_back(std::move(stats));
    k0 = k1;
  }

  result.trajectory.side = x0.side;
  result.trajectory.times.resize(steps + 1);
  result.trajectory.x.resize(steps + 1);
  result.trajectory.m.resize(steps + 1);
  for (long k = 0; k <= steps; ++k) {
    result.trajectory.times[k] = static_cast<double>(k) * cfg.dt;
    result.trajectory.x[k] = GridFn<D>{x0.side, xs[k]};
    result.trajectory.m[k] = frozen_m.m[k];
  }
  return result;
}

// Mass equation with a frozen position trajectory: fixed point of
//   m -> m0 + int_0^t Psi(s, x_bar(tau), m(tau)) dtau.
// Window from the short-time bound 1/(16 L S_inf X M^4); the iterate must
// stay inside [1/(2M), 2M] or the window is declared too long (automatic
// windows halve and retry, explicit windows raise window_error). Every
// iterate keeps the unit integral since the sign map is odd.
template <int D>
PicardResult<D> picard_decoupled_m(const ScalarGridFn<D>& m0,
                                   const ContinuumTrajectory<D>& frozen_x,
                                   const PicardConfig& cfg,
                                   const InfluenceKernel<D>& kernel,
                                   const SignMap<D>& sign, double horizon) {
  cfg.validate();
  validate_mass_grid<D>(m0);
  const long steps = steps_for_horizon(cfg.dt, horizon);
  detail::check_dense_nodes<D>(frozen_x, steps, cfg.dt, true, false);
  if (frozen_x.x.front().side != m0.side) throw contract_error("grid resolution mismatch");
  const std::size_t cells = m0.v.size();
  const double vol = cell_volume<D>(m0.side);

  double x_sup = 0.0;
  for (const auto& g : frozen_x.x)
    for (const auto& v : g.v) x_sup = std::max(x_sup, norm(v));
  const double bigx = x_sup + 1.0;

  std::vector<std::vector<double>> ms(steps + 1, m0.v);
  std::vector<std::vector<double>> psi(steps + 1, std::vector<double>(cells));
  std::vector<Vec<D>> vel(cells);
  std::vector<double> integral(cells), candidate(cells);

  PicardResult<D> result;
  long k0 = 0;
  while (k0 < steps) {
    double lo = ms[k0][0], hi = ms[k0][0];
    for (double v : ms[k0]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo > 0.0)) throw solver_error("mass grid lost positivity between windows");
    const double mass_bound = std::max(hi, 1.0 / lo);
    const double auto_window =
        1.0 / (16.0 * kernel.lip * sign.sup_bound * bigx * std::pow(mass_bound, 4));
    const bool automatic = cfg.window <= 0.0;
    long win = detail::window_steps(automatic ? auto_window : cfg.window, cfg.dt,
                                    steps - k0);
    const double env_lo = 1.0 / (2.0 * mass_bound);
    const double env_hi = 2.0 * mass_bound;

    for (;;) {
      const long k1 = k0 + win;
      WindowStats stats;
      stats.t_begin = static_cast<double>(k0) * cfg.dt;
      stats.t_end = static_cast<double>(k1) * cfg.dt;
      for (long k = k0 + 1; k <= k1; ++k) ms[k] = ms[k0];

      bool converged = false;
      bool escaped = false;
      for (int sweep = 0; sweep < cfg.max_iterations && !escaped; ++sweep) {
        for (long l = k0; l <= k1; ++l) {
          rhs_positions_into<D>(frozen_x.x[l].v, ms[l], kernel, vel, cfg.threads);
          rhs_masses_into<D>(frozen_x.x[l].v, ms[l], vel, sign, psi[l], cfg.threads);
        }
        std::fill(integral.begin(), integral.end(), 0.0);
        double diff = 0.0;
        for (long k = k0 + 1; k <= k1; ++k) {
          for (std::size_t c = 0; c < cells; ++c) {
            integral[c] += (0.5 * cfg.dt) * (psi[k - 1][c] + psi[k][c]);
            candidate[c] = ms[k0][c] + integral[c];
            if (candidate[c] < env_lo || candidate[c] > env_hi) escaped = true;
          }
          const std::vector<double>& old = ms[k];
          diff = std::max(diff, vol * pairwise_sum(cells, [&](std::size_t c) {
                            return std::abs(candidate[c] - old[c]);
                          }));
          ms[k] = candidate;
        }
        if (escaped) break;
        stats.sweep_diffs.push_back(diff);
        stats.iterations = sweep + 1;
        if (diff < cfg.tolerance) {
          converged = true;
          break;
        }
      }
      if (escaped) {
        if (!automatic || win == 1)
          throw window_error("mass iterate left the [1/(2M), 2M] envelope on window [" +
                             std::to_string(stats.t_begin) + ", " +
                             std::to_string(stats.t_end) + "]; window too long");
        win /= 2;
        continue;
      }
      if (!converged)
        throw solver_error("mass fixed point did not converge on window [" +
                           std::to_string(stats.t_begin) + ", " +
                           std::to_string(stats.t_end) + "]");
      result.windows.push_back(std::move(stats));
      k0 = k1;
      break;
    }
  }

  result.trajectory.side = m0.side;
  result.trajectory.times.resize(steps + 1);
  result.trajectory.x.resize(steps + 1);
  result.trajectory.m.resize(steps + 1);
  for (long k = 0; k <= steps; ++k) {
    result.trajectory.times[k] = static_cast<double>(k) * cfg.dt;
    result.trajectory.x[k] = frozen_x.x[k];
    result.trajectory.m[k] = ScalarGridFn<D>{m0.side, ms[k]};
  }
  return result;
}

template <int D>
struct CoupledPicardResult {
  ContinuumTrajectory<D> trajectory;  // dense on the dt grid
  std::vector<double> outer_diffs;    // successive alternation differences
  std::vector<WindowStats> x_windows; // from the final position solve
  std::vector<WindowStats> m_windows; // from the final mass solve
};

// Alternating scheme for the coupled system: x_n solves the position
// equation against m_{n-1}, m_n solves the mass equation against x_{n-1},
// starting from the constant-in-time iterates (x0, m0). Stops when the
// sup-position plus L1-mass difference between consecutive iterates is below
// tolerance.
template <int D>
CoupledPicardResult<D> solve_coupled_picard(const GridFn<D>& x0, const ScalarGridFn<D>& m0,
                                            const PicardConfig& cfg,
                                            const InfluenceKernel<D>& kernel,
                                            const SignMap<D>& sign, double horizon) {
  cfg.validate();
  check_same_grid(x0, m0);
  validate_mass_grid<D>(m0);
  const long steps = steps_for_horizon(cfg.dt, horizon);
  const std::size_t cells = x0.v.size();
  const double vol = cell_volume<D>(x0.side);

  ContinuumTrajectory<D> prev;
  prev.side = x0.side;
  prev.times.resize(steps + 1);
  prev.x.assign(steps + 1, x0);
  prev.m.assign(steps + 1, m0);
  for (long k = 0; k <= steps; ++k) prev.times[k] = static_cast<double>(k) * cfg.dt;

  CoupledPicardResult<D> result;
  for (int outer = 0; outer < cfg.max_iterations; ++outer) {
    PicardResult<D> xr = picard_decoupled_x<D>(x0, prev, cfg, kernel, horizon);
    PicardResult<D> mr = picard_decoupled_m<D>(m0, prev, cfg, kernel, sign, horizon);

    double x_diff = 0.0, m_diff = 0.0;
    for (long k = 0; k <= steps; ++k) {
      for (std::size_t c = 0; c < cells; ++c)
        x_diff = std::max(x_diff, norm(xr.trajectory.x[k].v[c] - prev.x[k].v[c]));
      m_diff = std::max(m_diff, vol * pairwise_sum(cells, [&](std::size_t c) {
                          return std::abs(mr.trajectory.m[k].v[c] - prev.m[k].v[c]);
                        }));
    }
    const double u = x_diff + m_diff;
    result.outer_diffs.push_back(u);

    for (long k = 0; k <= steps; ++k) {
      prev.x[k] = xr.trajectory.x[k];
      prev.m[k] = mr.trajectory.m[k];
    }
    if (u < cfg.tolerance) {
      result.trajectory = std::move(prev);
      result.x_windows = std::move(xr.windows);
      result.m_windows = std::move(mr.windows);
      return result;
    }
  }
  throw solver_error("coupled alternation did not converge within " +
                     std::to_string(cfg.max_iterations) + " outer iterations");
}

// Thin a dense trajectory to every record_every-th node (final node kept).
template <int D>
ContinuumTrajectory<D> sampled(const ContinuumTrajectory<D>& traj, int record_every) {
  if (record_every < 1) throw contract_error("record_every must be >= 1");
  ContinuumTrajectory<D> out;
  out.side = traj.side;
  const std::size_t last = traj.times.size() - 1;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    if (k % static_cast<std::size_t>(record_every) == 0 || k == last) {
      out.times.push_back(traj.times[k]);
      out.x.push_back(traj.x[k]);
      out.m.push_back(traj.m[k]);
    }
  }
  return out;
}

}  // namespace paircomp
