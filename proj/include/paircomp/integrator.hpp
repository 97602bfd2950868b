#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/model.hpp"

namespace paircomp {

enum class Scheme { rk4_fixed, euler };

struct IntegratorConfig {
  Scheme scheme = Scheme::rk4_fixed;
  double dt = 1e-3;
  int record_every = 1;
  // Minimum admissible pairwise distance; crossing it aborts the run instead
  // of integrating through the sign discontinuity.
  double collision_floor = 1e-9;
  int threads = 1;

  void validate(double horizon) const {
    if (!(dt > 0.0)) throw contract_error("dt must be positive");
    if (dt > horizon + 1e-15) throw contract_error("dt must not exceed the horizon");
    if (record_every < 1) throw contract_error("record_every must be >= 1");
    if (!(collision_floor >= 0.0)) throw contract_error("collision_floor must be >= 0");
  }
};

// Number of steps for a horizon that the step size must divide (within
// roundoff slack, so horizons like ln 2 with dt = T/n are accepted).
inline long steps_for_horizon(double dt, double horizon) {
  const long steps = std::lround(horizon / dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - horizon) >
                       1e-9 * std::max(1.0, std::abs(horizon)))
    throw contract_error("dt must divide the horizon");
  return steps;
}

// ---------------------------------------------------------------------------
// Shared fixed-step advance. Both the particle integrator and the grid
// time-stepper run these exact update expressions, which is what makes a
// resolution-K grid run bit-identical to the matching K^d particle run.
// ---------------------------------------------------------------------------

namespace detail {

template <int D>
struct StepWorkspace {
  std::vector<Vec<D>> k1x, k2x, k3x, k4x, xt;
  std::vector<double> k1m, k2m, k3m, k4m, mt;

  void resize(std::size_t p) {
    for (auto* v : {&k1x, &k2x, &k3x, &k4x, &xt}) v->resize(p);
    for (auto* v : {&k1m, &k2m, &k3m, &k4m, &mt}) v->resize(p);
  }
};

// rhs(x, m, dx, dm) evaluates both derivative arrays for the given arrays.
template <int D, class Rhs>
void advance_in_place(std::vector<Vec<D>>& x, std::vector<double>& m, double dt,
                      Scheme scheme, Rhs&& rhs, StepWorkspace<D>& w) {
  const std::size_t p = x.size();
  w.resize(p);
  if (scheme == Scheme::euler) {
    rhs(x, m, w.k1x, w.k1m);
    for (std::size_t i = 0; i < p; ++i) {
      for (int c = 0; c < D; ++c) x[i][c] += dt * w.k1x[i][c];
      m[i] += dt * w.k1m[i];
    }
    return;
  }
  rhs(x, m, w.k1x, w.k1m);
  const double h2 = 0.5 * dt;
  for (std::size_t i = 0; i < p; ++i) {
    for (int c = 0; c < D; ++c) w.xt[i][c] = x[i][c] + h2 * w.k1x[i][c];
    w.mt[i] = m[i] + h2 * w.k1m[i];
  }
  rhs(w.xt, w.mt, w.k2x, w.k2m);
  for (std::size_t i = 0; i < p; ++i) {
    for (int c = 0; c < D; ++c) w.xt[i][c] = x[i][c] + h2 * w.k2x[i][c];
    w.mt[i] = m[i] + h2 * w.k2m[i];
  }
  rhs(w.xt, w.mt, w.k3x, w.k3m);
  for (std::size_t i = 0; i < p; ++i) {
    for (int c = 0; c < D; ++c) w.xt[i][c] = x[i][c] + dt * w.k3x[i][c];
    w.mt[i] = m[i] + dt * w.k3m[i];
  }
  rhs(w.xt, w.mt, w.k4x, w.k4m);
  const double h6 = dt / 6.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (int c = 0; c < D; ++c)
      x[i][c] += h6 * (w.k1x[i][c] + 2.0 * w.k2x[i][c] + 2.0 * w.k3x[i][c] + w.k4x[i][c]);
    m[i] += h6 * (w.k1m[i] + 2.0 * w.k2m[i] + 2.0 * w.k3m[i] + w.k4m[i]);
  }
}

template <int D>
auto particle_rhs(const InfluenceKernel<D>& kernel, const SignMap<D>& sign, int threads) {
  return [&kernel, &sign, threads](const std::vector<Vec<D>>& x,
                                   const std::vector<double>& m, std::vector<Vec<D>>& dx,
                                   std::vector<double>& dm) {
    rhs_positions_into<D>(x, m, kernel, dx, threads);
    rhs_masses_into<D>(x, m, dx, sign, dm, threads);
  };
}

template <int D>
void check_masses_positive(const std::vector<double>& m, double t) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!(m[i] > 0.0))
      throw collapse_error("mass " + std::to_string(i) + " collapsed to " +
                               std::to_string(m[i]) + " at t = " + std::to_string(t),
                           i);
}

template <int D>
double min_pairwise_distance(const std::vector<Vec<D>>& x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      best = std::min(best, norm(x[i] - x[j]));
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One step and full trajectories.
// ---------------------------------------------------------------------------

template <int D>
DiscreteState<D> step(const DiscreteState<D>& state, const IntegratorConfig& cfg,
                      const InfluenceKernel<D>& kernel, const SignMap<D>& sign) {
  if (!(cfg.dt > 0.0)) throw contract_error("dt must be positive");
  DiscreteState<D> next = state;
  detail::StepWorkspace<D> w;
  detail::advance_in_place<D>(next.positions, next.masses, cfg.dt, cfg.scheme,
                              detail::particle_rhs<D>(kernel, sign, cfg.threads), w);
  next.time = state.time + cfg.dt;
  detail::check_masses_positive<D>(next.masses, next.time);
  return next;
}

template <int D>
struct Trajectory {
  std::vector<double> times;
  std::vector<DiscreteState<D>> states;

  std::size_t index_of(double t, double tol = 1e-9) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) <= tol) return k;
    throw contract_error("trajectory is not recorded at t = " + std::to_string(t));
  }
  const DiscreteState<D>& at_time(double t, double tol = 1e-9) const {
    return states[index_of(t, tol)];
  }
};

struct InvariantRecord {
  double t = 0.0;
  double mass_dev = 0.0;       // |mean mass - 1|
  double min_env_ratio = 0.0;  // slack of the weight envelope (>= 1 means inside)
  double max_pos_ratio = 0.0;  // max |x_i| over the position bound (<= 1 means inside)
  double sep_ratio = 0.0;      // min over pairs of |dx(t)|^2 e^{2Lt} / |dx(0)|^2
};

struct InvariantLog {
  double weight_rate_conservative = 0.0;  // rate used by the envelope check
  double weight_rate_nominal = 0.0;       // rate with L and S_inf absorbed, reported only
  double position_limit = 0.0;            // X e^{2LT}
  std::vector<InvariantRecord> rows;

  double max_mass_dev() const {
    double v = 0.0;
    for (const auto& r : rows) v = std::max(v, r.mass_dev);
    return v;
  }
  double min_env_ratio() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) v = std::min(v, r.min_env_ratio);
    return v;
  }
  double max_pos_ratio() const {
    double v = 0.0;
    for (const auto& r : rows) v = std::max(v, r.max_pos_ratio);
    return v;
  }
  double min_sep_ratio() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) v = std::min(v, r.sep_ratio);
    return v;
  }
};

struct InvariantTolerances {
  double mass = 1e-10;
  double envelope = 1e-9;
  double position = 1e-8;
  double separation = 1e-6;
};

inline bool invariants_within(const InvariantLog& log, const InvariantTolerances& tol) {
  return log.max_mass_dev() <= tol.mass && log.min_env_ratio() >= 1.0 - tol.envelope &&
         log.max_pos_ratio() <= 1.0 + tol.position &&
         log.min_sep_ratio() >= 1.0 - tol.separation;
}

template <int D>
struct SimResult {
  Trajectory<D> trajectory;
  InvariantLog log;
};

namespace detail {

template <int D>
InvariantRecord invariant_record(const DiscreteState<D>& state,
                                 const DiscreteState<D>& initial, const InvariantLog& log,
                                 double lip) {
  InvariantRecord rec;
  rec.t = state.time;
  rec.mass_dev = std::abs(mean_mass(state) - 1.0);

  const double t = state.time;
  const double r = log.weight_rate_conservative;
  double env = std::numeric_limits<double>::infinity();
  double pos = 0.0;
  for (std::size_t i = 0; i < state.count(); ++i) {
    const double lower = initial.masses[i] * std::exp(-r * t);
    const double upper = initial.masses[i] * std::exp(r * t);
    env = std::min(env, state.masses[i] / lower);
    env = std::min(env, upper / state.masses[i]);
    pos = std::max(pos, norm(state.positions[i]) / log.position_limit);
  }
  rec.min_env_ratio = env;
  rec.max_pos_ratio = pos;

  double sep = std::numeric_limits<double>::infinity();
  const double growth = std::exp(2.0 * lip * t);
  for (std::size_t i = 0; i + 1 < state.count(); ++i)
    for (std::size_t j = i + 1; j < state.count(); ++j) {
      const double d0 = norm_sq(initial.positions[i] - initial.positions[j]);
      const double dt_ = norm_sq(state.positions[i] - state.positions[j]);
      sep = std::min(sep, dt_ * growth / d0);
    }
  if (state.count() < 2) sep = 1.0;
  rec.sep_ratio = sep;
  return rec;
}

}  // namespace detail

// Integrates the system over [0, params.horizon], recording every
// record_every steps (the final step is always recorded) and monitoring the
// conservation, envelope and separation invariants at each recorded step.
template <int D>
SimResult<D> simulate(const DiscreteState<D>& initial, const IntegratorConfig& cfg,
                      const InfluenceKernel<D>& kernel, const SignMap<D>& sign,
                      const ModelParams& params) {
  params.validate();
  cfg.validate(params.horizon);
  const long steps = steps_for_horizon(cfg.dt, params.horizon);
  for (std::size_t i = 0; i + 1 < initial.count(); ++i)
    for (std::size_t j = i + 1; j < initial.count(); ++j)
      if (initial.positions[i] == initial.positions[j])
        throw contract_error("initial positions " + std::to_string(i) + " and " +
                             std::to_string(j) + " coincide");
  for (std::size_t i = 0; i < initial.count(); ++i)
    if (norm(initial.positions[i]) > params.pos_bound * (1.0 + 1e-12))
      throw contract_error("initial position " + std::to_string(i) +
                           " exceeds the declared bound");

  SimResult<D> result;
  result.log.weight_rate_conservative = params.weight_rate_conservative();
  result.log.weight_rate_nominal = params.weight_rate_nominal();
  result.log.position_limit = params.position_envelope();

  DiscreteState<D> state = initial;
  state.time = 0.0;
  detail::StepWorkspace<D> w;
  auto rhs = detail::particle_rhs<D>(kernel, sign, cfg.threads);

  auto record = [&](const DiscreteState<D>& s) {
    result.trajectory.times.push_back(s.time);
    result.trajectory.states.push_back(s);
    result.log.rows.push_back(detail::invariant_record<D>(s, initial, result.log, params.lip_a));
    if (s.count() >= 2) {
      const double sep = detail::min_pairwise_distance<D>(s.positions);
      if (sep < cfg.collision_floor)
        throw solver_error("minimum pairwise distance " + std::to_string(sep) +
                           " fell below the collision floor at t = " + std::to_string(s.time));
    }
  };

  record(state);
  for (long k = 1; k <= steps; ++k) {
    detail::advance_in_place<D>(state.positions, state.masses, cfg.dt, cfg.scheme, rhs, w);
    state.time = static_cast<double>(k) * cfg.dt;
    detail::check_masses_positive<D>(state.masses, state.time);
    if (k % cfg.record_every == 0 || k == steps) record(state);
  }
  return result;
}

// min over pairs of |x_i(t) - x_j(t)|^2 e^{2Lt} / |x_i(0) - x_j(0)|^2 at a
// recorded time; values >= 1 certify the exponential separation bound.
template <int D>
double separation_ratio(const Trajectory<D>& traj, double t, double lip) {
  const std::size_t k = traj.index_of(t);
  const DiscreteState<D>& initial = traj.states.front();
  const DiscreteState<D>& state = traj.states[k];
  if (state.count() < 2) return 1.0;
  for (std::size_t i = 0; i + 1 < initial.count(); ++i)
    for (std::size_t j = i + 1; j < initial.count(); ++j)
      if (initial.positions[i] == initial.positions[j])
        throw contract_error("separation ratio undefined: coincident initial pair");
  double best = std::numeric_limits<double>::infinity();
  const double growth = std::exp(2.0 * lip * state.time);
  for (std::size_t i = 0; i + 1 < state.count(); ++i)
    for (std::size_t j = i + 1; j < state.count(); ++j) {
      const double d0 = norm_sq(initial.positions[i] - initial.positions[j]);
      const double dt_ = norm_sq(state.positions[i] - state.positions[j]);
      best = std::min(best, dt_ * growth / d0);
    }
  return best;
}

template <int D>
bool strictly_increasing(const DiscreteState<D>& state) {
  static_assert(D == 1, "ordering is a one-dimensional notion");
  for (std::size_t i = 0; i + 1 < state.count(); ++i)
    if (!(state.positions[i][0] < state.positions[i + 1][0])) return false;
  return true;
}

}  // namespace paircomp
