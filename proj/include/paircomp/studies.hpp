#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "paircomp/csv.hpp"
#include "paircomp/embedding.hpp"
#include "paircomp/errors.hpp"
#include "paircomp/grid.hpp"
#include "paircomp/integrator.hpp"
#include "paircomp/labeling.hpp"
#include "paircomp/measure.hpp"
#include "paircomp/picard.hpp"
#include "paircomp/scenario.hpp"

namespace paircomp {

struct StudyOptions {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
};

namespace detail {

inline std::filesystem::path study_dir(const Scenario& sc, const StudyOptions& opts) {
  return opts.out_dir / sc.name;
}

template <int D>
void write_trajectory_csv(const Trajectory<D>& traj, const std::filesystem::path& path) {
  std::initializer_list<std::string> cols1 = {"t", "i", "x_1", "m"};
  std::initializer_list<std::string> cols2 = {"t", "i", "x_1", "x_2", "m"};
  std::initializer_list<std::string> cols3 = {"t", "i", "x_1", "x_2", "x_3", "m"};
  CsvWriter csv(D == 1 ? cols1 : (D == 2 ? cols2 : cols3));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const DiscreteState<D>& s = traj.states[k];
    for (std::size_t i = 0; i < s.count(); ++i) {
      csv.field(traj.times[k]).field(static_cast<long>(i + 1));
      for (int c = 0; c < D; ++c) csv.field(s.positions[i][c]);
      csv.field(s.masses[i]);
      csv.end_row();
    }
  }
  csv.save(path);
}

inline void write_invariants_csv(const InvariantLog& log,
                                 const std::filesystem::path& path) {
  CsvWriter csv({"t", "mass_dev", "min_env_ratio", "max_pos_ratio", "sep_ratio"});
  for (const auto& r : log.rows) {
    csv.field(r.t)
        .field(r.mass_dev)
        .field(r.min_env_ratio)
        .field(r.max_pos_ratio)
        .field(r.sep_ratio);
    csv.end_row();
  }
  csv.save(path);
}

template <int D>
void write_continuum_csv(const ContinuumTrajectory<D>& traj,
                         const std::filesystem::path& path) {
  CubeLabeling labeling(D, traj.side);
  std::initializer_list<std::string> cols1 = {"t", "cell_multi_index", "x_1", "m"};
  std::initializer_list<std::string> cols2 = {"t", "cell_multi_index", "x_1", "x_2", "m"};
  std::initializer_list<std::string> cols3 = {"t", "cell_multi_index", "x_1", "x_2",
                                              "x_3", "m"};
  CsvWriter csv(D == 1 ? cols1 : (D == 2 ? cols2 : cols3));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t c = 0; c < traj.x[k].v.size(); ++c) {
      csv.field(traj.times[k]).field(labeling.multi_string(c));
      for (int comp = 0; comp < D; ++comp) csv.field(traj.x[k].v[c][comp]);
      csv.field(traj.m[k].v[c]);
      csv.end_row();
    }
  }
  csv.save(path);
}

template <class F>
auto dispatch_dim(int dim, F&& f) {
  switch (dim) {
    case 1:
      return f(std::integral_constant<int, 1>{});
    case 2:
      return f(std::integral_constant<int, 2>{});
    case 3:
      return f(std::integral_constant<int, 3>{});
    default:
      throw config_error("unsupported dimension " + std::to_string(dim));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate: discrete runs per refinement with invariant monitoring.
// ---------------------------------------------------------------------------

struct SimulateOutcome {
  bool invariants_ok = true;
  std::vector<std::filesystem::path> files;
};

inline SimulateOutcome run_simulate(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  return detail::dispatch_dim(sc.dim, [&](auto dim_tag) -> SimulateOutcome {
    constexpr int D = decltype(dim_tag)::value;
    const auto kernel = sc.kernel<D>();
    const auto sign = sc.sign<D>();
    ModelParams params = sc.model_params();
    IntegratorConfig cfg = sc.integrator;
    cfg.threads = opts.threads;
    const std::filesystem::path dir = detail::study_dir(sc, opts);

    SimulateOutcome outcome;
    nlohmann::json summary;
    summary["scenario"] = sc.name;
    summary["seed"] = opts.seed;
    summary["weight_rate_conservative"] = params.weight_rate_conservative();
    summary["weight_rate_nominal"] = params.weight_rate_nominal();
    summary["position_limit"] = params.position_envelope();
    nlohmann::json per_level = nlohmann::json::array();

    SplitRng rng(opts.seed);
    for (int n : sc.refinements) {
      const DiscreteState<D> initial =
          initial_state<D>(sc, n, rng.split(static_cast<std::uint64_t>(n)));
      const SimResult<D> result = simulate<D>(initial, cfg, kernel, sign, params);
      const bool ok = invariants_within(result.log, sc.tol.invariants);
      outcome.invariants_ok = outcome.invariants_ok && ok;

      const auto traj_path = dir / ("trajectory_N" + std::to_string(n) + ".csv");
      const auto inv_path = dir / ("invariants_N" + std::to_string(n) + ".csv");
      detail::write_trajectory_csv<D>(result.trajectory, traj_path);
      detail::write_invariants_csv(result.log, inv_path);
      outcome.files.push_back(traj_path);
      outcome.files.push_back(inv_path);

      nlohmann::json level;
      level["N"] = n;
      level["invariants_ok"] = ok;
      level["max_mass_dev"] = result.log.max_mass_dev();
      level["min_env_ratio"] = result.log.min_env_ratio();
      level["max_pos_ratio"] = result.log.max_pos_ratio();
      level["min_sep_ratio"] = result.log.min_sep_ratio();
      per_level.push_back(level);
    }
    summary["levels"] = per_level;
    summary["invariants_ok"] = outcome.invariants_ok;
    write_file_atomic(dir / "simulate.json", summary.dump(2) + "\n");
    outcome.files.push_back(dir / "simulate.json");
    return outcome;
  });
}

// ---------------------------------------------------------------------------
// graphlimit: continuum solves at the reference resolution, optionally
// cross-validating the direct stepper against the fixed-point solver.
// ---------------------------------------------------------------------------

struct GraphlimitOutcome {
  double cross_diff = 0.0;  // sup position + sup L1 mass difference
  bool cross_ok = true;
  std::vector<std::filesystem::path> files;
};

inline GraphlimitOutcome run_graphlimit(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  return detail::dispatch_dim(sc.dim, [&](auto dim_tag) -> GraphlimitOutcome {
    constexpr int D = decltype(dim_tag)::value;
    const auto kernel = sc.kernel<D>();
    const auto sign = sc.sign<D>();
    const int kref = sc.resolved_reference_side();
    IntegratorConfig cfg = sc.integrator;
    cfg.threads = opts.threads;
    const std::filesystem::path dir = detail::study_dir(sc, opts);

    const DiscreteState<D> projected = project_initial<D>(
        initial_data<D>(sc).x0, initial_data<D>(sc).m0, kref);
    const auto [x0g, m0g] = riemann_embed<D>(projected);

    GraphlimitOutcome outcome;
    nlohmann::json summary;
    summary["scenario"] = sc.name;
    summary["seed"] = opts.seed;
    summary["k_ref"] = kref;
    summary["solver"] = sc.solver;

    std::optional<ContinuumTrajectory<D>> direct;
    std::optional<ContinuumTrajectory<D>> picard;
    if (sc.solver == "direct" || sc.solver == "both") {
      direct = solve_direct<D>(x0g, m0g, cfg, kernel, sign, sc.horizon);
      const auto path = dir / ("continuum_K" + std::to_string(kref) + ".csv");
      detail::write_continuum_csv<D>(*direct, path);
      outcome.files.push_back(path);
    }
    if (sc.solver == "picard" || sc.solver == "both") {
      PicardConfig pcfg = sc.picard;
      pcfg.dt = cfg.dt;
      pcfg.threads = opts.threads;
      const CoupledPicardResult<D> res =
          solve_coupled_picard<D>(x0g, m0g, pcfg, kernel, sign, sc.horizon);
      picard = sampled<D>(res.trajectory, cfg.record_every);
      const auto path = dir / ("continuum_picard_K" + std::to_string(kref) + ".csv");
      detail::write_continuum_csv<D>(*picard, path);
      outcome.files.push_back(path);
      double worst_ratio = 0.0;
      for (const auto& wnd : res.x_windows)
        for (std::size_t s = 0; s + 1 < wnd.sweep_diffs.size(); ++s)
          if (wnd.sweep_diffs[s] > 100.0 * pcfg.tolerance)
            worst_ratio = std::max(worst_ratio,
                                   wnd.sweep_diffs[s + 1] / wnd.sweep_diffs[s]);
      summary["picard_outer_iterations"] = res.outer_diffs.size();
      summary["picard_worst_sweep_ratio"] = worst_ratio;
    }
    if (direct && picard) {
      const double vol = cell_volume<D>(kref);
      double xdiff = 0.0, mdiff = 0.0;
      for (std::size_t k = 0; k < direct->times.size(); ++k) {
        for (std::size_t c = 0; c < direct->x[k].v.size(); ++c)
          xdiff = std::max(xdiff, norm(direct->x[k].v[c] - picard->x[k].v[c]));
        mdiff = std::max(
            mdiff, vol * pairwise_sum(direct->m[k].v.size(), [&](std::size_t c) {
              return std::abs(direct->m[k].v[c] - picard->m[k].v[c]);
            }));
      }
      outcome.cross_diff = xdiff + mdiff;
      outcome.cross_ok = outcome.cross_diff <= sc.tol.cross;
      summary["cross_diff"] = outcome.cross_diff;
      summary["cross_ok"] = outcome.cross_ok;
    }
    write_file_atomic(dir / "graphlimit.json", summary.dump(2) + "\n");
    outcome.files.push_back(dir / "graphlimit.json");
    return outcome;
  });
}

// ---------------------------------------------------------------------------
// converge: the refinement study. Projects the initial data per level,
// simulates, embeds, and compares against the reference grid solution in the
// dimension-appropriate norm; the g_N residual and W1 series ride along.
// ---------------------------------------------------------------------------

struct ConvergeOutcome {
  ConvergenceReport report;
  bool monotone = false;
  bool gn_monotone = false;
  double final_over_first = 0.0;
  std::vector<std::filesystem::path> files;
};

inline ConvergeOutcome run_converge(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  return detail::dispatch_dim(sc.dim, [&](auto dim_tag) -> ConvergeOutcome {
    constexpr int D = decltype(dim_tag)::value;
    const auto kernel = sc.kernel<D>();
    const auto sign = sc.sign<D>();
    ModelParams params = sc.model_params();
    IntegratorConfig cfg = sc.integrator;
    cfg.threads = opts.threads;
    const int kref = sc.resolved_reference_side();
    const std::filesystem::path dir = detail::study_dir(sc, opts);
    const InitialData<D> data = initial_data<D>(sc);

    const DiscreteState<D> ref_initial = project_initial<D>(data.x0, data.m0, kref);
    const auto [x0g, m0g] = riemann_embed<D>(ref_initial);
    const ContinuumTrajectory<D> reference =
        solve_direct<D>(x0g, m0g, cfg, kernel, sign, sc.horizon);

    const std::size_t recorded = reference.times.size();
    std::vector<ScalarGridFn<D>> psis(recorded);
    std::vector<AtomicMeasure<D>> ref_measures(recorded);
    for (std::size_t k = 0; k < recorded; ++k) {
      psis[k] = psi_grid<D>(reference.x[k], reference.m[k], kernel, sign, opts.threads);
      ref_measures[k] = continuum_measure<D>(reference.x[k], reference.m[k]);
    }

    ConvergeOutcome outcome;
    outcome.report.dim = D;
    outcome.report.norm_kind = norm_kind_for_dim(D);
    outcome.report.reference_side = kref;
    outcome.report.seed = opts.seed;

    SplitRng rng(opts.seed);
    for (int n : sc.refinements) {
      const DiscreteState<D> initial =
          initial_state<D>(sc, n, rng.split(static_cast<std::uint64_t>(n)));
      const SimResult<D> sim = simulate<D>(initial, cfg, kernel, sign, params);
      if (sim.trajectory.times.size() != recorded)
        throw solver_error("recorded time grids of the levels do not match");

      ConvergenceSeries series;
      series.refinement = n;
      series.times = sim.trajectory.times;
      for (std::size_t k = 0; k < recorded; ++k) {
        const auto [xg, mg] = riemann_embed<D>(sim.trajectory.states[k]);
        const auto [xi, zeta] = xi_zeta<D>(xg, mg, reference.x[k], reference.m[k]);
        series.xi.push_back(xi);
        series.zeta.push_back(zeta);
        series.gn.push_back(gn_from_psi<D>(psis[k], n));
        const AtomicMeasure<D> mu = empirical_measure<D>(sim.trajectory.states[k]);
        if constexpr (D == 1)
          series.w1.push_back(w1_1d(mu, ref_measures[k]));
        else
          series.w1.push_back(w1_discrete<D>(mu, ref_measures[k]));
      }
      outcome.report.levels.push_back(std::move(series));
    }

    outcome.monotone = outcome.report.sup_strictly_decreasing();
    outcome.gn_monotone = outcome.report.gn_strictly_decreasing();
    outcome.final_over_first = outcome.report.levels.back().sup_xi_zeta() /
                               outcome.report.levels.front().sup_xi_zeta();

    CsvWriter csv({"N", "t", "xi", "zeta", "gn", "w1"});
    for (const auto& series : outcome.report.levels)
      for (std::size_t k = 0; k < series.times.size(); ++k) {
        csv.field(series.refinement)
            .field(series.times[k])
            .field(series.xi[k])
            .field(series.zeta[k])
            .field(series.gn[k])
            .field(series.w1[k]);
        csv.end_row();
      }
    const auto csv_path = dir / "convergence.csv";
    csv.save(csv_path);
    outcome.files.push_back(csv_path);

    nlohmann::json summary;
    summary["scenario"] = sc.name;
    summary["seed"] = opts.seed;
    summary["k_ref"] = kref;
    summary["norm_kind"] = D == 1 ? "l2_squared" : "l1";
    summary["sup_strictly_decreasing"] = outcome.monotone;
    summary["gn_strictly_decreasing"] = outcome.gn_monotone;
    summary["final_over_first"] = outcome.final_over_first;
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t i = 0; i < outcome.report.levels.size(); ++i) {
      const auto& series = outcome.report.levels[i];
      nlohmann::json level;
      level["N"] = series.refinement;
      level["sup_xi_zeta"] = series.sup_xi_zeta();
      level["sup_gn"] = series.sup_gn();
      level["final_w1"] = series.w1.back();
      if (i > 0)
        level["decay_ratio"] =
            series.sup_xi_zeta() / outcome.report.levels[i - 1].sup_xi_zeta();
      levels.push_back(level);
    }
    summary["levels"] = levels;
    write_file_atomic(dir / "converge.json", summary.dump(2) + "\n");
    outcome.files.push_back(dir / "converge.json");
    return outcome;
  });
}

// ---------------------------------------------------------------------------
// meanfield: W1 between the weighted empirical measure and the discretized
// continuum measure, per refinement and recorded time. In d = 1 the CDF and
// min-cost-flow routes are cross-checked on a stride of the recorded times.
// ---------------------------------------------------------------------------

struct MeanfieldOutcome {
  std::vector<int> refinements;
  std::vector<double> times;
  std::vector<std::vector<double>> w1;  // [level][time]
  double max_cross_diff = 0.0;
  std::size_t cross_checked = 0;
  std::vector<std::filesystem::path> files;

  bool decreasing_at(double t, double tol = 1e-9) const {
    std::size_t k = 0;
    while (k < times.size() && std::abs(times[k] - t) > tol) ++k;
    if (k == times.size())
      throw contract_error("meanfield series not recorded at t = " + std::to_string(t));
    for (std::size_t level = 0; level + 1 < w1.size(); ++level)
      if (!(w1[level + 1][k] < w1[level][k])) return false;
    return true;
  }
};

inline MeanfieldOutcome run_meanfield(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  return detail::dispatch_dim(sc.dim, [&](auto dim_tag) -> MeanfieldOutcome {
    constexpr int D = decltype(dim_tag)::value;
    const auto kernel = sc.kernel<D>();
    const auto sign = sc.sign<D>();
    ModelParams params = sc.model_params();
    IntegratorConfig cfg = sc.integrator;
    cfg.threads = opts.threads;
    const int kref = sc.resolved_reference_side();
    const std::filesystem::path dir = detail::study_dir(sc, opts);
    const InitialData<D> data = initial_data<D>(sc);

    const DiscreteState<D> ref_initial = project_initial<D>(data.x0, data.m0, kref);
    const auto [x0g, m0g] = riemann_embed<D>(ref_initial);
    const ContinuumTrajectory<D> reference =
        solve_direct<D>(x0g, m0g, cfg, kernel, sign, sc.horizon);
    const std::size_t recorded = reference.times.size();
    std::vector<AtomicMeasure<D>> ref_measures(recorded);
    for (std::size_t k = 0; k < recorded; ++k)
      ref_measures[k] = continuum_measure<D>(reference.x[k], reference.m[k]);

    MeanfieldOutcome outcome;
    outcome.refinements = sc.refinements;
    outcome.times = reference.times;
    const std::size_t stride = std::max<std::size_t>(1, recorded / 10);

    SplitRng rng(opts.seed);
    for (int n : sc.refinements) {
      const DiscreteState<D> initial =
          initial_state<D>(sc, n, rng.split(static_cast<std::uint64_t>(n)));
      const SimResult<D> sim = simulate<D>(initial, cfg, kernel, sign, params);
      std::vector<double> series(recorded);
      for (std::size_t k = 0; k < recorded; ++k) {
        const AtomicMeasure<D> mu = empirical_measure<D>(sim.trajectory.states[k]);
        if constexpr (D == 1) {
          series[k] = w1_1d(mu, ref_measures[k]);
          if (k % stride == 0 || k + 1 == recorded) {
            const double flow = w1_discrete<1>(mu, ref_measures[k]);
            outcome.max_cross_diff =
                std::max(outcome.max_cross_diff, std::abs(flow - series[k]));
            ++outcome.cross_checked;
          }
        } else {
          series[k] = w1_discrete<D>(mu, ref_measures[k]);
        }
      }
      outcome.w1.push_back(std::move(series));
    }

    CsvWriter csv({"N", "t", "w1"});
    for (std::size_t level = 0; level < outcome.w1.size(); ++level)
      for (std::size_t k = 0; k < recorded; ++k) {
        csv.field(outcome.refinements[level])
            .field(outcome.times[k])
            .field(outcome.w1[level][k]);
        csv.end_row();
      }
    const auto csv_path = dir / "meanfield.csv";
    csv.save(csv_path);
    outcome.files.push_back(csv_path);

    nlohmann::json summary;
    summary["scenario"] = sc.name;
    summary["seed"] = opts.seed;
    summary["k_ref"] = kref;
    summary["cross_checked_instances"] = outcome.cross_checked;
    summary["max_cross_diff"] = outcome.max_cross_diff;
    write_file_atomic(dir / "meanfield.json", summary.dump(2) + "\n");
    outcome.files.push_back(dir / "meanfield.json");
    return outcome;
  });
}

// ---------------------------------------------------------------------------
// bench: wall-clock scaling of the factorized mass derivative against the
// literal triple sum, with the outputs re-checked for agreement while the
// clock runs.
// ---------------------------------------------------------------------------

struct BenchLevel {
  int particles = 0;
  double seconds_factorized = 0.0;
  double seconds_bruteforce = 0.0;
  double max_diff = 0.0;
};

struct BenchOutcome {
  std::vector<BenchLevel> levels;
  std::vector<double> factorized_ratios;
  std::vector<double> bruteforce_ratios;
  double max_diff = 0.0;
  std::vector<std::filesystem::path> files;
};

namespace detail {

// Best-of batches, each batch long enough for the clock to resolve.
inline double time_seconds(const std::function<void()>& body, int min_reps = 3,
                           double min_batch_seconds = 0.02) {
  using clock = std::chrono::steady_clock;
  int batch = 1;
  for (;;) {
    const auto begin = clock::now();
    for (int r = 0; r < batch; ++r) body();
    const double elapsed = std::chrono::duration<double>(clock::now() - begin).count();
    if (elapsed >= min_batch_seconds || batch >= (1 << 20)) break;
    batch *= elapsed <= min_batch_seconds / 16 ? 16 : 2;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < min_reps; ++rep) {
    const auto begin = clock::now();
    for (int r = 0; r < batch; ++r) body();
    const double elapsed = std::chrono::duration<double>(clock::now() - begin).count();
    best = std::min(best, elapsed / batch);
  }
  return best;
}

}  // namespace detail

inline BenchOutcome run_bench(const Scenario& sc, const StudyOptions& opts) {
  sc.validate();
  if (sc.dim != 1) throw config_error("bench scenarios are one-dimensional");
  const auto kernel = sc.kernel<1>();
  const auto sign = sc.sign<1>();
  const std::filesystem::path dir = detail::study_dir(sc, opts);

  BenchOutcome outcome;
  SplitRng rng(opts.seed);
  for (int p : sc.refinements) {
    const DiscreteState<1> state =
        initial_state<1>(sc, p, rng.split(static_cast<std::uint64_t>(p)));
    std::vector<Vec<1>> velocities(state.count());
    rhs_positions_into<1>(state.positions, state.masses, kernel, velocities,
                          opts.threads);
    std::vector<double> fact(state.count()), brute(state.count());

    BenchLevel level;
    level.particles = p;
    level.seconds_factorized = detail::time_seconds([&] {
      rhs_masses_into<1>(state.positions, state.masses, velocities, sign, fact,
                         opts.threads);
    });
    level.seconds_bruteforce = detail::time_seconds([&] {
      rhs_masses_bruteforce_into<1>(state.positions, state.masses, kernel, sign, brute,
                                    opts.threads);
    });
    for (std::size_t i = 0; i < state.count(); ++i)
      level.max_diff = std::max(level.max_diff, std::abs(fact[i] - brute[i]));
    outcome.max_diff = std::max(outcome.max_diff, level.max_diff);
    outcome.levels.push_back(level);
  }
  for (std::size_t i = 0; i + 1 < outcome.levels.size(); ++i) {
    outcome.factorized_ratios.push_back(outcome.levels[i + 1].seconds_factorized /
                                        outcome.levels[i].seconds_factorized);
    outcome.bruteforce_ratios.push_back(outcome.levels[i + 1].seconds_bruteforce /
                                        outcome.levels[i].seconds_bruteforce);
  }

  CsvWriter csv({"P", "seconds_factorized", "seconds_bruteforce", "max_diff"});
  for (const auto& level : outcome.levels) {
    csv.field(level.particles)
        .field(level.seconds_factorized)
        .field(level.seconds_bruteforce)
        .field(level.max_diff);
    csv.end_row();
  }
  const auto csv_path = dir / "bench.csv";
  csv.save(csv_path);
  outcome.files.push_back(csv_path);

  nlohmann::json summary;
  summary["scenario"] = sc.name;
  summary["seed"] = opts.seed;
  summary["factorized_ratios"] = outcome.factorized_ratios;
  summary["bruteforce_ratios"] = outcome.bruteforce_ratios;
  summary["max_diff"] = outcome.max_diff;
  write_file_atomic(dir / "bench.json", summary.dump(2) + "\n");
  outcome.files.push_back(dir / "bench.json");
  return outcome;
}

}  // namespace paircomp
