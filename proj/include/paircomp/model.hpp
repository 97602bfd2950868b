#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/parallel.hpp"
#include "paircomp/reduce.hpp"
#include "paircomp/vec.hpp"

namespace paircomp {

// ---------------------------------------------------------------------------
// Influence kernel a(x) = a(|x|) x: radial, Lipschitz, a(0) = 0. It drives
// the position dynamics; mass transfer only sees it through the velocities.
// ---------------------------------------------------------------------------

enum class KernelKind { linear, saturating, custom_radial };

template <int D>
struct InfluenceKernel {
  KernelKind kind = KernelKind::linear;
  double lip = 1.0;                      // Lipschitz constant L
  std::function<double(double)> radial;  // custom_radial only: r -> a(r)

  Vec<D> operator()(const Vec<D>& v) const {
    switch (kind) {
      case KernelKind::linear:
        return v;
      case KernelKind::saturating:
        return (1.0 / (1.0 + norm_sq(v))) * v;
      case KernelKind::custom_radial:
        return radial(norm(v)) * v;
    }
    return zero_vec<D>();
  }

  static InfluenceKernel linear_kernel() { return {KernelKind::linear, 1.0, {}}; }
  // a(x) = x / (1 + |x|^2); the radial profile peaks at 1 so L = 1.
  static InfluenceKernel saturating_kernel() { return {KernelKind::saturating, 1.0, {}}; }
  static InfluenceKernel custom(double lip, std::function<double(double)> profile) {
    if (!(lip > 0.0)) throw contract_error("kernel Lipschitz constant must be positive");
    return {KernelKind::custom_radial, lip, std::move(profile)};
  }
};

// Checked evaluation; the raw operator() is the unchecked hot path.
template <int D>
Vec<D> eval_influence(const InfluenceKernel<D>& kernel, const Vec<D>& v) {
  if (!all_finite(v)) throw domain_error("non-finite input to influence kernel");
  return kernel(v);
}

// ---------------------------------------------------------------------------
// Sign map s: sign function in d = 1, projection on the unit sphere in d > 1,
// zero at the origin. Odd and bounded; discontinuous only at 0.
// ---------------------------------------------------------------------------

template <int D>
struct SignMap {
  double sup_bound = 1.0;  // S_inf
  // d = 1: Lipschitz constant of s away from 0 (trivially 0 for the sign
  // function, kept configurable); d > 1: local-L1 bound of the Lipschitz
  // envelope 2/|x| of the unit projection over the relevant compact set.
  double lip_away = 1.0;

  Vec<D> operator()(const Vec<D>& v) const {
    if constexpr (D == 1) {
      return {v[0] > 0.0 ? 1.0 : (v[0] < 0.0 ? -1.0 : 0.0)};
    } else {
      const double r2 = norm_sq(v);
      if (r2 == 0.0) return zero_vec<D>();
      return (1.0 / std::sqrt(r2)) * v;
    }
  }
};

template <int D>
Vec<D> eval_sign(const SignMap<D>& sign, const Vec<D>& v) {
  if (!all_finite(v)) throw domain_error("non-finite input to sign map");
  return sign(v);
}

// ---------------------------------------------------------------------------
// Model constants.
// ---------------------------------------------------------------------------

struct ModelParams {
  int dim = 1;
  double lip_a = 1.0;       // L, Lipschitz constant of the influence
  double sign_bound = 1.0;  // S_inf, sup |s|
  double sign_lip = 1.0;    // S (d = 1) or the local-L1 descriptor (d > 1)
  double mass_bound = 2.0;  // M, with initial masses in [1/M, M]
  double pos_bound = 1.0;   // X, with |x_i(0)| <= X
  double horizon = 1.0;     // T

  void validate() const {
    if (dim < 1) throw contract_error("dim must be >= 1");
    if (!(lip_a > 0.0)) throw contract_error("lip_a must be positive");
    if (!(sign_bound > 0.0)) throw contract_error("sign_bound must be positive");
    if (!(sign_lip > 0.0)) throw contract_error("sign_lip must be positive");
    if (!(mass_bound > 1.0)) throw contract_error("mass_bound must exceed 1");
    if (!(pos_bound > 0.0)) throw contract_error("pos_bound must be positive");
    if (!(horizon > 0.0)) throw contract_error("horizon must be positive");
  }

  // Uniform-in-time position bound X e^{2LT}.
  double position_envelope() const { return pos_bound * std::exp(2.0 * lip_a * horizon); }

  // Exponential rate of the weight envelope m_i(0) e^{+-rt}. The provable
  // rate carries the factor L * S_inf; the nominal rate absorbs it. Both are
  // reported; the monitor checks the provable one.
  double weight_rate_conservative() const {
    return 2.0 * lip_a * sign_bound * position_envelope();
  }
  double weight_rate_nominal() const { return 2.0 * position_envelope(); }
};

// ---------------------------------------------------------------------------
// Discrete state: P = N^d particles, each an opinion x_i in R^d with a
// positive weight m_i. Mean weight is 1 and stays 1 along trajectories.
// ---------------------------------------------------------------------------

template <int D>
struct DiscreteState {
  double time = 0.0;
  std::vector<Vec<D>> positions;
  std::vector<double> masses;
  int side = 0;  // N, with particle count N^D

  std::size_t count() const { return positions.size(); }
};

// Exact integer d-th root; rejects counts that are not perfect powers.
template <int D>
int side_for_count(std::size_t p) {
  if (p == 0) throw contract_error("state must contain at least one particle");
  if constexpr (D == 1) {
    return static_cast<int>(p);
  } else {
    int n = static_cast<int>(std::llround(std::pow(static_cast<double>(p), 1.0 / D)));
    for (int c = std::max(1, n - 1); c <= n + 1; ++c) {
      std::size_t pw = 1;
      for (int k = 0; k < D; ++k) pw *= static_cast<std::size_t>(c);
      if (pw == p) return c;
    }
    throw contract_error("particle count " + std::to_string(p) +
                         " is not a perfect power of the dimension");
  }
}

template <int D>
double mean_mass(std::span<const double> masses) {
  return pairwise_sum(masses.size(), [&](std::size_t i) { return masses[i]; }) /
         static_cast<double>(masses.size());
}

template <int D>
double mean_mass(const DiscreteState<D>& state) {
  return mean_mass<D>(std::span<const double>(state.masses));
}

template <int D>
DiscreteState<D> make_state(std::vector<Vec<D>> positions, std::vector<double> masses,
                            double time = 0.0) {
  if (positions.size() != masses.size())
    throw contract_error("positions and masses must have equal length");
  DiscreteState<D> state;
  state.side = side_for_count<D>(positions.size());
  for (const auto& x : positions)
    if (!all_finite(x)) throw domain_error("non-finite position");
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!std::isfinite(masses[i])) throw domain_error("non-finite mass");
    if (!(masses[i] > 0.0))
      throw contract_error("mass " + std::to_string(i) + " must be positive");
  }
  state.time = time;
  state.positions = std::move(positions);
  state.masses = std::move(masses);
  const double dev = std::abs(mean_mass(state) - 1.0);
  if (dev > 1e-6)
    throw contract_error("mean mass must equal 1 (deviation " + std::to_string(dev) + ")");
  return state;
}

// ---------------------------------------------------------------------------
// Right-hand sides. The span-level routines are shared verbatim by the
// continuum grid solver, which makes the resolution-K grid system literally
// the P = K^d particle system, summation order included.
// ---------------------------------------------------------------------------

// dx_i = (1/P) sum_j m_j a(x_j - x_i)
template <int D>
void rhs_positions_into(std::span<const Vec<D>> x, std::span<const double> m,
                        const InfluenceKernel<D>& kernel, std::span<Vec<D>> out,
                        int threads = 1) {
  const std::size_t p = x.size();
  if (m.size() != p || out.size() != p)
    throw contract_error("rhs_positions: array length mismatch");
  const double invp = 1.0 / static_cast<double>(p);
  parallel_for(p, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec<D> xi = x[i];
      out[i] = invp * pairwise_sum_vec<D>(p, [&](std::size_t j) {
                 return m[j] * kernel(x[j] - xi);
               });
    }
  });
}

// dm_i = (1/P) sum_j m_i m_j <(v_i + v_j)/2, s(x_i - x_j)>, the O(P^2)
// factorization that reuses the velocities. The (i,j) and (j,i) terms negate
// each other exactly in floating point, so the total mass derivative cancels
// to rounding.
template <int D>
void rhs_masses_into(std::span<const Vec<D>> x, std::span<const double> m,
                     std::span<const Vec<D>> velocities, const SignMap<D>& sign,
                     std::span<double> out, int threads = 1) {
  const std::size_t p = x.size();
  if (m.size() != p || velocities.size() != p || out.size() != p)
    throw contract_error("rhs_masses: array length mismatch");
  const double invp = 1.0 / static_cast<double>(p);
  parallel_for(p, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec<D> xi = x[i];
      const Vec<D> vi = velocities[i];
      const double mi = m[i];
      out[i] = invp * pairwise_sum(p, [&](std::size_t j) {
                 const Vec<D> s = sign(xi - x[j]);
                 return (mi * m[j]) * dot(0.5 * (vi + velocities[j]), s);
               });
    }
  });
}

// psi_i = (1/(2P^2)) m_i sum_{j,k} m_j m_k <a(x_k - x_i) + a(x_k - x_j),
// s(x_i - x_j)>: the literal triple sum, O(P^3). Kept as the independent
// oracle for the factorized path.
template <int D>
void rhs_masses_bruteforce_into(std::span<const Vec<D>> x, std::span<const double> m,
                                const InfluenceKernel<D>& kernel, const SignMap<D>& sign,
                                std::span<double> out, int threads = 1) {
  const std::size_t p = x.size();
  if (m.size() != p || out.size() != p)
    throw contract_error("rhs_masses_bruteforce: array length mismatch");
  const double invp = 1.0 / static_cast<double>(p);
  parallel_for(p, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec<D> xi = x[i];
      const double acc = pairwise_sum(p, [&](std::size_t j) {
        const Vec<D> xj = x[j];
        const Vec<D> s = sign(xi - xj);
        const Vec<D> inner = pairwise_sum_vec<D>(p, [&](std::size_t k) {
          return m[k] * (kernel(x[k] - xi) + kernel(x[k] - xj));
        });
        return m[j] * dot(inner, s);
      });
      out[i] = 0.5 * invp * invp * m[i] * acc;
    }
  });
}

template <int D>
std::vector<Vec<D>> rhs_positions(const DiscreteState<D>& state,
                                  const InfluenceKernel<D>& kernel, int threads = 1) {
  std::vector<Vec<D>> out(state.count());
  rhs_positions_into<D>(state.positions, state.masses, kernel, out, threads);
  return out;
}

template <int D>
std::vector<double> rhs_masses(const DiscreteState<D>& state,
                               std::span<const Vec<D>> velocities, const SignMap<D>& sign,
                               int threads = 1) {
  std::vector<double> out(state.count());
  rhs_masses_into<D>(state.positions, state.masses, velocities, sign, out, threads);
  return out;
}

template <int D>
std::vector<double> rhs_masses_bruteforce(const DiscreteState<D>& state,
                                          const InfluenceKernel<D>& kernel,
                                          const SignMap<D>& sign, int threads = 1) {
  std::vector<double> out(state.count());
  rhs_masses_bruteforce_into<D>(state.positions, state.masses, kernel, sign, out, threads);
  return out;
}

}  // namespace paircomp
