// Command-line front end: scenario-driven studies of the pairwise
// competition dynamics and their graph limit.
//
// Exit codes: 0 success, 1 invariant violation, 2 configuration error,
// 3 solver failure.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "paircomp/paircomp.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string scenario;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Config file (key = value sections)");
  cmd->add_option("--scenario", args.scenario,
                  "Scenario name (section in the config, or a built-in)");
  cmd->add_option("--out", args.out_dir, "Output directory")
      ->envname("PAIRCOMP_OUT");
  cmd->add_option("--seed", args.seed, "Random seed recorded in the outputs");
  cmd->add_option("--threads", args.threads, "Worker threads (results are identical)")
      ->envname("PAIRCOMP_THREADS");
}

paircomp::Scenario resolve(const CommonArgs& args) {
  std::optional<std::filesystem::path> config;
  if (!args.config.empty()) config = args.config;
  return paircomp::select_scenario(config, args.scenario);
}

paircomp::StudyOptions options(const CommonArgs& args) {
  paircomp::StudyOptions opts;
  opts.out_dir = args.out_dir;
  opts.seed = args.seed;
  opts.threads = args.threads;
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise-competition opinion dynamics and graph-limit studies"};
  app.require_subcommand(1);

  CommonArgs sim_args, graph_args, conv_args, mean_args, bench_args;
  CLI::App* sim = app.add_subcommand("simulate", "Integrate the discrete system per refinement");
  add_common(sim, sim_args);
  CLI::App* graph = app.add_subcommand("graphlimit", "Solve the continuum grid system");
  add_common(graph, graph_args);
  CLI::App* conv = app.add_subcommand("converge", "Refinement study against the reference solution");
  add_common(conv, conv_args);
  CLI::App* mean = app.add_subcommand("meanfield", "Wasserstein-1 series per refinement");
  add_common(mean, mean_args);
  CLI::App* bench = app.add_subcommand("bench", "Scaling of the mass derivative evaluations");
  add_common(bench, bench_args);
  CLI::App* list = app.add_subcommand("scenarios", "List built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : paircomp::builtin_scenario_names())
        std::cout << name << "\n";
      return 0;
    }
    if (sim->parsed()) {
      const auto sc = resolve(sim_args);
      const auto outcome = paircomp::run_simulate(sc, options(sim_args));
      std::cout << "simulate " << sc.name
                << (outcome.invariants_ok ? ": invariants hold\n"
                                          : ": INVARIANT VIOLATION\n");
      return outcome.invariants_ok ? 0 : 1;
    }
    if (graph->parsed()) {
      const auto sc = resolve(graph_args);
      const auto outcome = paircomp::run_graphlimit(sc, options(graph_args));
      if (sc.solver == "both")
        std::cout << "graphlimit " << sc.name << ": solver cross-difference "
                  << outcome.cross_diff << (outcome.cross_ok ? "\n" : " EXCEEDS BUDGET\n");
      else
        std::cout << "graphlimit " << sc.name << ": done\n";
      return outcome.cross_ok ? 0 : 1;
    }
    if (conv->parsed()) {
      const auto sc = resolve(conv_args);
      const auto outcome = paircomp::run_converge(sc, options(conv_args));
      std::cout << "converge " << sc.name << ": sup_t(xi+zeta) "
                << (outcome.monotone ? "strictly decreasing" : "NOT DECREASING")
                << ", final/first = " << outcome.final_over_first << "\n";
      return outcome.monotone ? 0 : 1;
    }
    if (mean->parsed()) {
      const auto sc = resolve(mean_args);
      const auto outcome = paircomp::run_meanfield(sc, options(mean_args));
      std::cout << "meanfield " << sc.name << ": max CDF/flow difference "
                << outcome.max_cross_diff << " over " << outcome.cross_checked
                << " instances\n";
      return outcome.max_cross_diff <= 1e-9 ? 0 : 1;
    }
    if (bench->parsed()) {
      const auto sc = resolve(bench_args);
      const auto outcome = paircomp::run_bench(sc, options(bench_args));
      std::cout << "bench " << sc.name << ":";
      for (const auto& level : outcome.levels)
        std::cout << " P=" << level.particles << " ("
                  << level.seconds_factorized * 1e3 << " ms vs "
                  << level.seconds_bruteforce * 1e3 << " ms)";
      std::cout << "\n";
      return outcome.max_diff <= 1e-12 ? 0 : 1;
    }
  } catch (const paircomp::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const paircomp::contract_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const paircomp::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
