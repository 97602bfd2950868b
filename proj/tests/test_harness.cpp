#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "paircomp/scenario.hpp"
#include "paircomp/studies.hpp"

using namespace paircomp;

namespace {

std::filesystem::path temp_dir(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / "paircomp_tests" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario tiny_converge_scenario() {
  Scenario sc = builtin_scenario("canonical-1d");
  sc.name = "tiny";
  sc.refinements = {4, 8};
  sc.reference_side = 32;
  sc.horizon = 0.1;
  sc.integrator.record_every = 20;
  sc.validate();
  return sc;
}

}  // namespace

TEST_CASE("registry exposes the standard scenarios", "[harness]") {
  for (const auto& name : builtin_scenario_names()) CHECK_NOTHROW(builtin_scenario(name));
  const Scenario canonical = builtin_scenario("canonical-1d");
  CHECK(canonical.refinements == std::vector<int>{8, 16, 32, 64, 128});
  CHECK(canonical.resolved_reference_side() == 512);
  CHECK(canonical.dim == 1);
  const Scenario planar = builtin_scenario("canonical-2d");
  CHECK(planar.dim == 2);
  CHECK(planar.resolved_reference_side() == 32);
  CHECK_THROWS_AS(builtin_scenario("nope"), config_error);
}

TEST_CASE("config files parse into scenarios", "[harness]") {
  std::istringstream in(
      "# comment\n"
      "[my-run]\n"
      "dim = 1\n"
      "kernel = saturating\n"
      "family = arctan-sine\n"
      "steep = 3.0\n"
      "horizon = 0.5\n"
      "dt = 1e-3\n"
      "record_every = 5\n"
      "refinements = 4, 8, 16\n"
      "k_ref = 64\n");
  const auto scenarios = parse_config(in);
  REQUIRE(scenarios.size() == 1);
  const Scenario& sc = scenarios.front();
  CHECK(sc.name == "my-run");
  CHECK(sc.kernel_kind == KernelKind::saturating);
  CHECK(sc.family == InitialFamily::arctan_sine);
  CHECK(sc.family_param("steep", 0.0) == 3.0);
  CHECK(sc.refinements == std::vector<int>{4, 8, 16});
  CHECK(sc.reference_side == 64);
}

TEST_CASE("config errors carry line numbers", "[harness]") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  CHECK_THROWS_AS(parse("dim = 1\n"), config_error);          // outside a section
  CHECK_THROWS_AS(parse("[s]\nnope = 1\n"), config_error);    // unknown key
  CHECK_THROWS_AS(parse("[s]\ndim = two\n"), config_error);   // not a number
  CHECK_THROWS_AS(parse("[s]\ndim\n"), config_error);         // no assignment
  CHECK_THROWS_AS(parse("[s]\nk_ref = 100\n"), config_error); // not a multiple

  try {
    parse("[s]\nnope = 1\n");
    FAIL("expected a config error");
  } catch (const config_error& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("initial-data families", "[harness]") {
  const Scenario pair = builtin_scenario("pair-asymmetric");
  const auto state = initial_state<1>(pair, 2, SplitRng(1));
  CHECK(state.positions[0][0] == -1.0);
  CHECK(state.masses[0] == 1.5);

  const Scenario cloud = builtin_scenario("stress-cubic");
  const auto random = initial_state<1>(cloud, 64, SplitRng(7));
  CHECK(random.count() == 64);
  CHECK(std::abs(mean_mass(random) - 1.0) <= 1e-12);
  for (std::size_t i = 0; i + 1 < random.count(); ++i)
    CHECK(random.positions[i][0] < random.positions[i + 1][0]);

  const auto again = initial_state<1>(cloud, 64, SplitRng(7));
  CHECK(again.positions[10][0] == random.positions[10][0]);

  const Scenario ramp = builtin_scenario("canonical-1d");
  const auto projected = initial_state<1>(ramp, 8, SplitRng(3));
  for (std::size_t i = 0; i + 1 < projected.count(); ++i)
    CHECK(projected.positions[i][0] < projected.positions[i + 1][0]);
}

TEST_CASE("planar family is certifiably bi-Lipschitz", "[harness]") {
  const Scenario sc = builtin_scenario("canonical-2d");
  const auto data = initial_data<2>(sc);
  // |A| and |A^-1| for the fixed affine part, eps-perturbed by a 1-Lipschitz
  // field: distortion stays inside [1/|A^-1| - eps, |A| + eps].
  const double eps = sc.family_param("eps", 0.2);
  const double upper = 1.3 + eps;   // coarse bound on |A|_2 plus eps
  const double lower = 1.0 / 1.2 - eps;  // coarse bound on 1/|A^-1|_2 minus eps
  REQUIRE(lower > 0.0);
  SplitRng rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    Vec<2> s1{rng.next_double(), rng.next_double()};
    Vec<2> s2{rng.next_double(), rng.next_double()};
    const double ds = norm(s1 - s2);
    if (ds < 1e-9) continue;
    const double dx = norm(data.x0(s1) - data.x0(s2));
    CHECK(dx / ds <= upper * (1.0 + 1e-9));
    CHECK(dx / ds >= lower * (1.0 - 1e-9));
  }
}

TEST_CASE("simulate study writes the contracted schemas", "[harness]") {
  const auto dir = temp_dir("simulate");
  StudyOptions opts;
  opts.out_dir = dir;
  opts.seed = 42;
  const auto outcome = run_simulate(builtin_scenario("pair-asymmetric"), opts);
  CHECK(outcome.invariants_ok);

  const std::string traj = slurp(dir / "pair-asymmetric" / "trajectory_N2.csv");
  CHECK(traj.rfind("t,i,x_1,m\n", 0) == 0);
  const std::string inv = slurp(dir / "pair-asymmetric" / "invariants_N2.csv");
  CHECK(inv.rfind("t,mass_dev,min_env_ratio,max_pos_ratio,sep_ratio\n", 0) == 0);

  const auto summary =
      nlohmann::json::parse(slurp(dir / "pair-asymmetric" / "simulate.json"));
  CHECK(summary["seed"] == 42);
  CHECK(summary["invariants_ok"] == true);
  CHECK(summary["weight_rate_conservative"].get<double>() > 0.0);
  CHECK(summary["weight_rate_nominal"].get<double>() > 0.0);
}

TEST_CASE("converge outputs are byte-identical across thread counts", "[harness]") {
  const Scenario sc = tiny_converge_scenario();
  StudyOptions one;
  one.out_dir = temp_dir("threads1");
  one.seed = 7;
  one.threads = 1;
  StudyOptions many;
  many.out_dir = temp_dir("threads8");
  many.seed = 7;
  many.threads = 8;

  const auto a = run_converge(sc, one);
  const auto b = run_converge(sc, many);
  CHECK(slurp(one.out_dir / sc.name / "convergence.csv") ==
        slurp(many.out_dir / sc.name / "convergence.csv"));
  CHECK(slurp(one.out_dir / sc.name / "converge.json") ==
        slurp(many.out_dir / sc.name / "converge.json"));
}

TEST_CASE("a level matching the reference resolution is exact", "[harness]") {
  Scenario sc = builtin_scenario("canonical-1d");
  sc.name = "match";
  sc.refinements = {8, 16};
  sc.reference_side = 16;
  sc.horizon = 0.1;
  sc.integrator.record_every = 20;
  sc.validate();
  StudyOptions opts;
  opts.out_dir = temp_dir("match");
  const auto outcome = run_converge(sc, opts);
  // The N = K_ref level runs the very same arithmetic as the reference.
  CHECK(outcome.report.levels.back().sup_xi_zeta() <= 1e-8);
  CHECK(outcome.report.levels.back().sup_gn() == 0.0);
}

TEST_CASE("converge report decreases on the tiny ladder", "[harness]") {
  StudyOptions opts;
  opts.out_dir = temp_dir("tiny");
  const auto outcome = run_converge(tiny_converge_scenario(), opts);
  CHECK(outcome.monotone);
  CHECK(outcome.gn_monotone);
  CHECK(outcome.report.norm_kind == NormKind::l2_squared);
  const std::string csv = slurp(opts.out_dir / "tiny" / "convergence.csv");
  CHECK(csv.rfind("N,t,xi,zeta,gn,w1\n", 0) == 0);
}

TEST_CASE("meanfield study cross-checks the flow solver", "[harness]") {
  Scenario sc = tiny_converge_scenario();
  sc.name = "tiny-meanfield";
  StudyOptions opts;
  opts.out_dir = temp_dir("meanfield");
  const auto outcome = run_meanfield(sc, opts);
  CHECK(outcome.cross_checked > 0);
  CHECK(outcome.max_cross_diff <= 1e-9);
  const std::string csv = slurp(opts.out_dir / sc.name / "meanfield.csv");
  CHECK(csv.rfind("N,t,w1\n", 0) == 0);
}

TEST_CASE("simulate flags invariant violations", "[harness]") {
  Scenario sc = builtin_scenario("pair-asymmetric");
  sc.tol.invariants.mass = 0.0;  // unattainable on purpose
  StudyOptions opts;
  opts.out_dir = temp_dir("violation");
  const auto outcome = run_simulate(sc, opts);
  CHECK_FALSE(outcome.invariants_ok);
}

TEST_CASE("bench handles the singleton sanity row", "[harness]") {
  Scenario sc = builtin_scenario("stress-cubic");
  sc.name = "bench-sanity";
  sc.refinements = {1, 2};
  sc.reference_side = 2;
  sc.validate();
  StudyOptions opts;
  opts.out_dir = temp_dir("bench");
  const auto outcome = run_bench(sc, opts);
  REQUIRE(outcome.levels.size() == 2);
  CHECK(outcome.levels.front().particles == 1);
  CHECK(outcome.levels.front().seconds_factorized < 1e-3);
  CHECK(outcome.max_diff <= 1e-12);
}

TEST_CASE("scheme key selects the euler integrator", "[harness]") {
  std::istringstream in(
      "[euler-run]\n"
      "family = ramp-sine\nscheme = euler\nrefinements = 4\nk_ref = 4\n"
      "horizon = 0.1\ndt = 1e-2\n");
  const auto scenarios = parse_config(in);
  REQUIRE(scenarios.size() == 1);
  CHECK(scenarios.front().integrator.scheme == Scheme::euler);
}

TEST_CASE("graphlimit cross-validates the two solvers", "[harness]") {
  Scenario sc = builtin_scenario("canonical-1d");
  sc.name = "cross";
  sc.refinements = {8};
  sc.reference_side = 16;
  sc.horizon = 0.25;
  sc.solver = "both";
  sc.integrator.record_every = 50;
  sc.validate();
  StudyOptions opts;
  opts.out_dir = temp_dir("graphlimit");
  const auto outcome = run_graphlimit(sc, opts);
  CHECK(outcome.cross_ok);
  CHECK(outcome.cross_diff <= 1e-6);
  const std::string csv = slurp(opts.out_dir / "cross" / "continuum_K16.csv");
  CHECK(csv.rfind("t,cell_multi_index,x_1,m\n", 0) == 0);
}
