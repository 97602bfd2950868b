#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/errors.hpp"
#include "paircomp/grid.hpp"
#include "paircomp/model.hpp"
#include "paircomp/reduce.hpp"
#include "paircomp/vec.hpp"

namespace paircomp {

// Weighted point masses. Both the particle system and the continuum grids
// induce unit-mass atomic measures, which is what the transport distances
// compare.
template <int D>
struct AtomicMeasure {
  std::vector<Vec<D>> locations;
  std::vector<double> weights;

  std::size_t size() const { return locations.size(); }
  double total_weight() const {
    return pairwise_sum(weights.size(), [&](std::size_t i) { return weights[i]; });
  }
  void validate(double tol = 1e-10) const {
    if (locations.size() != weights.size())
      throw contract_error("atom locations and weights must have equal length");
    for (double w : weights)
      if (!(w > 0.0)) throw contract_error("atom weights must be positive");
    if (std::abs(total_weight() - 1.0) > tol)
      throw contract_error("atomic measure must have unit total weight");
  }
};

// mu_N = (1/P) sum_j m_j delta_{x_j}
template <int D>
AtomicMeasure<D> empirical_measure(const DiscreteState<D>& state) {
  AtomicMeasure<D> mu;
  mu.locations = state.positions;
  mu.weights.resize(state.count());
  const double invp = 1.0 / static_cast<double>(state.count());
  for (std::size_t i = 0; i < state.count(); ++i) mu.weights[i] = invp * state.masses[i];
  return mu;
}

// Discretization of int m(t,s) delta_{x(t,s)} ds: one atom per cell.
template <int D>
AtomicMeasure<D> continuum_measure(const GridFn<D>& xg, const ScalarGridFn<D>& mg) {
  check_same_grid(xg, mg);
  AtomicMeasure<D> mu;
  mu.locations = xg.v;
  mu.weights.resize(mg.v.size());
  const double vol = cell_volume<D>(xg.side);
  for (std::size_t i = 0; i < mg.v.size(); ++i) mu.weights[i] = vol * mg.v[i];
  return mu;
}

namespace detail {

inline void check_equal_mass(double a, double b) {
  if (std::abs(a - b) > 1e-8 * std::max({1.0, std::abs(a), std::abs(b)}))
    throw contract_error("transport requires equal total masses");
}

}  // namespace detail

// Exact 1-d Wasserstein-1 distance: the integral of the absolute CDF
// difference over the merged support.
inline double w1_1d(const AtomicMeasure<1>& mu, const AtomicMeasure<1>& nu) {
  const double wm = mu.total_weight();
  const double wn = nu.total_weight();
  detail::check_equal_mass(wm, wn);
  const double rescale = wm / wn;

  std::vector<std::pair<double, double>> events;
  events.reserve(mu.size() + nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    events.emplace_back(mu.locations[i][0], mu.weights[i]);
  for (std::size_t i = 0; i < nu.size(); ++i)
    events.emplace_back(nu.locations[i][0], -nu.weights[i] * rescale);
  std::sort(events.begin(), events.end());

  double dist = 0.0;
  double cdf_gap = 0.0;
  double prev = events.front().first;
  for (const auto& [pos, dw] : events) {
    if (pos > prev) {
      dist += std::abs(cdf_gap) * (pos - prev);
      prev = pos;
    }
    cdf_gap += dw;
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Exact discrete optimal transport with Euclidean ground cost in any
// dimension: a min-cost flow on the complete bipartite graph solved by
// successive shortest paths with node potentials. Same optimum a network
// simplex would deliver; double precision, reduced costs floored at zero.
// The capacity guard keeps the dense cost matrix and the quadratic Dijkstra
// affordable.
// ---------------------------------------------------------------------------

template <int D>
double w1_discrete(const AtomicMeasure<D>& mu, const AtomicMeasure<D>& nu) {
  const std::size_t n = mu.size();
  const std::size_t m = nu.size();
  if (n == 0 || m == 0) throw contract_error("transport requires nonempty measures");
  if (n + m > 10000)
    throw capacity_error("atom count " + std::to_string(n + m) +
                         " exceeds the exact-transport capacity of 10000");
  const double wm = mu.total_weight();
  const double wn = nu.total_weight();
  detail::check_equal_mass(wm, wn);
  const double rescale = wm / wn;

  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      cost[i * m + j] = norm(mu.locations[i] - nu.locations[j]);

  std::vector<double> supply = mu.weights;
  std::vector<double> demand(m);
  for (std::size_t j = 0; j < m; ++j) demand[j] = nu.weights[j] * rescale;

  // flow[j] lists (supplier, amount) arcs with positive flow into consumer j.
  std::vector<std::vector<std::pair<std::size_t, double>>> flow(m);
  const std::size_t nodes = n + m;  // suppliers [0, n), consumers [n, n + m)
  std::vector<double> pi(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);
  const std::size_t kRoot = nodes;
  const double inf = std::numeric_limits<double>::infinity();

  const double total = wm;
  const double eps = 1e-15 * std::max(1.0, total);
  const long max_augmentations = 50 * static_cast<long>(nodes) + 1000;
  long augmentations = 0;

  // Residual supplies and demands zero out exactly when an augmentation
  // saturates them, so termination is decided on the arrays themselves (a
  // running total would accumulate drift over thousands of augmentations).
  for (;;) {
    if (++augmentations > max_augmentations)
      throw solver_error("transport solver exceeded its augmentation budget");

    // Multi-source Dijkstra on the residual graph in reduced costs; stops at
    // the first consumer with residual demand. Sources keep a sentinel
    // parent, so walking parents from the target ends at a live supplier.
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), char{0});
    std::fill(parent.begin(), parent.end(), kRoot);
    bool have_source = false;
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > eps) {
        dist[i] = 0.0;
        have_source = true;
      }
    if (!have_source) break;

    std::size_t target = kRoot;
    while (target == kRoot) {
      std::size_t u = kRoot;
      double best = inf;
      for (std::size_t v = 0; v < nodes; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == kRoot) break;
      done[u] = 1;
      if (u >= n && demand[u - n] > eps) {
        target = u;
        break;
      }
      if (u < n) {
        // Forward arcs supplier -> every consumer, reduced cost
        // c_ij + pi_i - pi_j >= 0.
        const double* row = cost.data() + u * m;
        for (std::size_t j = 0; j < m; ++j) {
          if (done[n + j]) continue;
          const double rc = std::max(0.0, row[j] + pi[u] - pi[n + j]);
          if (dist[u] + rc < dist[n + j]) {
            dist[n + j] = dist[u] + rc;
            parent[n + j] = u;
          }
        }
      } else {
        // Backward arcs consumer -> supplier along positive flow.
        const std::size_t j = u - n;
        for (const auto& [i, f] : flow[j]) {
          if (done[i] || !(f > 0.0)) continue;
          const double rc = std::max(0.0, -cost[i * m + j] + pi[u] - pi[i]);
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            parent[i] = u;
          }
        }
      }
    }
    if (target == kRoot) break;  // no residual demand left to serve

    const double d_target = dist[target];
    for (std::size_t v = 0; v < nodes; ++v) pi[v] += std::min(dist[v], d_target);

    // Bottleneck along the augmenting path.
    double push = demand[target - n];
    for (std::size_t v = target; parent[v] != kRoot; v = parent[v]) {
      const std::size_t p = parent[v];
      if (v < n) {
        // Path traverses consumer p -> supplier v: bounded by flow v -> p.
        for (const auto& [i, f] : flow[p - n])
          if (i == v) {
            push = std::min(push, f);
            break;
          }
      }
      if (parent[p] == kRoot) push = std::min(push, supply[p]);
    }

    // Apply.
    std::size_t v = target;
    while (parent[v] != kRoot) {
      const std::size_t p = parent[v];
      if (v >= n) {
        auto& arcs = flow[v - n];
        bool found = false;
        for (auto& [i, f] : arcs)
          if (i == p) {
            f += push;
            found = true;
            break;
          }
        if (!found) arcs.emplace_back(p, push);
      } else {
        for (auto& [i, f] : flow[p - n])
          if (i == v) {
            f -= push;
            if (f < eps) f = 0.0;  // sweep dust so paths cannot stall on it
            break;
          }
      }
      v = p;
    }
    supply[v] -= push;
    demand[target - n] -= push;
  }

  double value = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (const auto& [i, f] : flow[j])
      if (f > 0.0) value += f * cost[i * m + j];
  return value;
}

}  // namespace paircomp
