#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "paircomp/embedding.hpp"
#include "paircomp/errors.hpp"
#include "paircomp/integrator.hpp"
#include "paircomp/model.hpp"
#include "paircomp/picard.hpp"
#include "paircomp/rng.hpp"

namespace paircomp {

// ---------------------------------------------------------------------------
// A scenario bundles everything a study needs: the model, the initial-data
// family, the integrator, the refinement ladder and the tolerances. Built-in
// scenarios cover the standard study set; config files use flat key = value
// sections, one section per scenario.
// ---------------------------------------------------------------------------

enum class InitialFamily { pair, ramp_sine, arctan_sine, affine_perturbed, random_cloud };

struct ScenarioTolerances {
  InvariantTolerances invariants;
  double cross = 1e-6;  // solver cross-validation budget
};

struct Scenario {
  std::string name = "unnamed";
  int dim = 1;
  KernelKind kernel_kind = KernelKind::linear;
  std::string sign_kind = "projection";
  InitialFamily family = InitialFamily::ramp_sine;
  std::map<std::string, double> family_params;

  double horizon = 1.0;
  IntegratorConfig integrator;
  std::vector<int> refinements = {8, 16, 32, 64, 128};
  int reference_side = 0;  // 0 = 16 * max refinement

  double mass_bound = 2.0;
  double pos_bound = 1.0;
  ScenarioTolerances tol;

  std::string solver = "direct";  // direct | picard | both
  PicardConfig picard;

  double family_param(const std::string& key, double fallback) const {
    const auto it = family_params.find(key);
    return it == family_params.end() ? fallback : it->second;
  }

  int max_refinement() const {
    return *std::max_element(refinements.begin(), refinements.end());
  }

  int resolved_reference_side() const {
    return reference_side > 0 ? reference_side : 16 * max_refinement();
  }

  ModelParams model_params() const {
    ModelParams p;
    p.dim = dim;
    p.lip_a = 1.0;  // both built-in kernels have L = 1
    p.sign_bound = 1.0;
    p.sign_lip = 1.0;
    p.mass_bound = mass_bound;
    p.pos_bound = pos_bound;
    p.horizon = horizon;
    return p;
  }

  template <int D>
  InfluenceKernel<D> kernel() const {
    return kernel_kind == KernelKind::linear ? InfluenceKernel<D>::linear_kernel()
                                             : InfluenceKernel<D>::saturating_kernel();
  }

  template <int D>
  SignMap<D> sign() const {
    return SignMap<D>{};
  }

  void validate() const {
    if (dim < 1 || dim > 3)
      throw config_error("dim must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
    if (sign_kind != "projection")
      throw config_error("unknown sign kind '" + sign_kind + "'");
    if (refinements.empty()) throw config_error("refinements must not be empty");
    for (std::size_t i = 0; i + 1 < refinements.size(); ++i)
      if (refinements[i] >= refinements[i + 1])
        throw config_error("refinements must be strictly increasing");
    if (refinements.front() < 1) throw config_error("refinements must be >= 1");
    if (!(horizon > 0.0)) throw config_error("horizon must be positive");
    if (!(integrator.dt > 0.0) || integrator.dt > horizon)
      throw config_error("dt must lie in (0, horizon]");
    if (integrator.record_every < 1) throw config_error("record_every must be >= 1");
    if (!(mass_bound > 1.0)) throw config_error("mass_bound must exceed 1");
    if (!(pos_bound > 0.0)) throw config_error("pos_bound must be positive");
    if (solver != "direct" && solver != "picard" && solver != "both")
      throw config_error("solver must be direct, picard or both");
    const int kref = resolved_reference_side();
    if (kref % max_refinement() != 0)
      throw config_error("k_ref must be a multiple of the largest refinement");
    if (family == InitialFamily::pair) {
      if (dim != 1) throw config_error("the pair family is one-dimensional");
      if (refinements != std::vector<int>{2})
        throw config_error("the pair family requires refinements = 2");
      const double m1 = family_param("m1", 1.0), m2 = family_param("m2", 1.0);
      if (std::abs(m1 + m2 - 2.0) > 1e-12)
        throw config_error("pair masses must average to 1");
      if (family_param("x1", -1.0) == family_param("x2", 1.0))
        throw config_error("pair positions must be distinct");
    }
    if (family == InitialFamily::affine_perturbed && dim != 2)
      throw config_error("the affine-perturbed family is two-dimensional");
    if ((family == InitialFamily::ramp_sine || family == InitialFamily::arctan_sine) &&
        dim != 1)
      throw config_error("the ramp families are one-dimensional");
    const double amp = family_param("amp", 0.5);
    if (!(std::abs(amp) < 1.0))
      throw config_error("mass amplitude must satisfy |amp| < 1");
  }
};

// ---------------------------------------------------------------------------
// Initial data. Function families define (x0, m0) on the unit cube and are
// projected by cell averaging; the pair and random families construct the
// particle state directly.
// ---------------------------------------------------------------------------

template <int D>
struct InitialData {
  std::function<Vec<D>(const Vec<D>&)> x0;
  std::function<double(const Vec<D>&)> m0;
};

namespace detail {

// Fixed affine part of the two-dimensional family; eps scales a smooth
// 1-Lipschitz perturbation, and eps < 1/(2 |A^{-1}|) keeps the map
// bi-Lipschitz with a certifiable constant.
inline constexpr double kAffine[2][2] = {{1.0, 0.2}, {-0.1, 0.9}};

}  // namespace detail

template <int D>
InitialData<D> initial_data(const Scenario& sc) {
  const double amp = sc.family_param("amp", 0.5);
  constexpr double tau = 2.0 * std::numbers::pi;
  if constexpr (D == 1) {
    if (sc.family == InitialFamily::ramp_sine) {
      return {[](const Vec<1>& s) { return Vec<1>{s[0]}; },
              [amp, tau](const Vec<1>& s) { return 1.0 + amp * std::sin(tau * s[0]); }};
    }
    if (sc.family == InitialFamily::arctan_sine) {
      const double steep = sc.family_param("steep", 4.0);
      return {[steep](const Vec<1>& s) { return Vec<1>{std::atan(steep * (s[0] - 0.5))}; },
              [amp, tau](const Vec<1>& s) { return 1.0 + amp * std::sin(tau * s[0]); }};
    }
  } else if constexpr (D == 2) {
    if (sc.family == InitialFamily::affine_perturbed) {
      const double eps = sc.family_param("eps", 0.2);
      return {[eps, tau](const Vec<2>& s) {
                const double u = s[0] - 0.5, v = s[1] - 0.5;
                return Vec<2>{detail::kAffine[0][0] * u + detail::kAffine[0][1] * v +
                                  eps / tau * std::sin(tau * s[1]),
                              detail::kAffine[1][0] * u + detail::kAffine[1][1] * v +
                                  eps / tau * std::sin(tau * s[0])};
              },
              [amp, tau](const Vec<2>& s) {
                return 1.0 + amp * std::sin(tau * s[0]) * std::sin(tau * s[1]);
              }};
    }
  }
  throw config_error("family is not a function family for dimension " +
                     std::to_string(D));
}

template <int D>
DiscreteState<D> initial_state(const Scenario& sc, int refinement, SplitRng rng) {
  if (sc.family == InitialFamily::pair) {
    if constexpr (D == 1) {
      std::vector<Vec<1>> x = {{sc.family_param("x1", -1.0)},
                               {sc.family_param("x2", 1.0)}};
      std::vector<double> m = {sc.family_param("m1", 1.0), sc.family_param("m2", 1.0)};
      return make_state<1>(std::move(x), std::move(m));
    }
    throw config_error("the pair family is one-dimensional");
  }
  if (sc.family == InitialFamily::random_cloud) {
    std::size_t p = 1;
    for (int k = 0; k < D; ++k) p *= static_cast<std::size_t>(refinement);
    std::vector<Vec<D>> x(p);
    std::vector<double> m(p);
    for (std::size_t i = 0; i < p; ++i)
      for (int k = 0; k < D; ++k)
        x[i][k] = rng.uniform(-sc.pos_bound, sc.pos_bound);
    if constexpr (D == 1)
      std::sort(x.begin(), x.end(),
                [](const Vec<1>& a, const Vec<1>& b) { return a[0] < b[0]; });
    for (std::size_t i = 0; i < p; ++i) m[i] = rng.uniform(0.5, 1.5);
    const double mean =
        pairwise_sum(p, [&](std::size_t i) { return m[i]; }) / static_cast<double>(p);
    for (double& v : m) v /= mean;
    return make_state<D>(std::move(x), std::move(m));
  }
  return project_initial<D>(initial_data<D>(sc).x0, initial_data<D>(sc).m0, refinement);
}

// ---------------------------------------------------------------------------
// Built-in scenario registry.
// ---------------------------------------------------------------------------

inline std::vector<std::string> builtin_scenario_names() {
  return {"pair-symmetric", "pair-asymmetric", "canonical-1d", "canonical-2d",
          "stress-cubic"};
}

inline Scenario builtin_scenario(const std::string& name) {
  Scenario sc;
  sc.name = name;
  if (name == "pair-symmetric" || name == "pair-asymmetric") {
    sc.family = InitialFamily::pair;
    sc.family_params = {{"x1", -1.0}, {"x2", 1.0}, {"m1", 1.0}, {"m2", 1.0}};
    if (name == "pair-asymmetric") {
      sc.family_params["m1"] = 1.5;
      sc.family_params["m2"] = 0.5;
    }
    sc.refinements = {2};
    sc.reference_side = 2;
    sc.integrator.record_every = 10;
  } else if (name == "canonical-1d") {
    sc.family = InitialFamily::ramp_sine;
    sc.family_params = {{"amp", 0.5}};
    sc.refinements = {8, 16, 32, 64, 128};
    sc.reference_side = 512;
    sc.integrator.record_every = 10;
  } else if (name == "canonical-2d") {
    sc.dim = 2;
    sc.family = InitialFamily::affine_perturbed;
    sc.family_params = {{"amp", 0.5}, {"eps", 0.2}};
    sc.horizon = 0.5;
    sc.refinements = {4, 8, 16};
    sc.reference_side = 32;
    sc.integrator.record_every = 50;
    sc.pos_bound = 1.6;
  } else if (name == "stress-cubic") {
    sc.family = InitialFamily::random_cloud;
    sc.refinements = {128, 256, 512};
    sc.reference_side = 512;
    sc.horizon = 0.1;
    sc.integrator.record_every = 10;
  } else {
    throw config_error("unknown scenario '" + name + "'");
  }
  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// Config files: '#' comments, [section] headers, flat key = value entries.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& value, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw config_error("expected a number, got '" + value + "'", line);
  }
  if (used != value.size())
    throw config_error("trailing characters after number '" + value + "'", line);
  return v;
}

inline int parse_int(const std::string& value, int line) {
  const double v = parse_number(value, line);
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 0.0)
    throw config_error("expected an integer, got '" + value + "'", line);
  return i;
}

inline void apply_key(Scenario& sc, const std::string& key, const std::string& value,
                      int line) {
  if (key == "dim") {
    sc.dim = parse_int(value, line);
  } else if (key == "kernel") {
    if (value == "linear")
      sc.kernel_kind = KernelKind::linear;
    else if (value == "saturating")
      sc.kernel_kind = KernelKind::saturating;
    else
      throw config_error("unknown kernel '" + value + "'", line);
  } else if (key == "sign") {
    sc.sign_kind = value;
  } else if (key == "family") {
    if (value == "pair")
      sc.family = InitialFamily::pair;
    else if (value == "ramp-sine")
      sc.family = InitialFamily::ramp_sine;
    else if (value == "arctan-sine")
      sc.family = InitialFamily::arctan_sine;
    else if (value == "affine-perturbed")
      sc.family = InitialFamily::affine_perturbed;
    else if (value == "random-cloud")
      sc.family = InitialFamily::random_cloud;
    else
      throw config_error("unknown family '" + value + "'", line);
  } else if (key == "horizon") {
    sc.horizon = parse_number(value, line);
  } else if (key == "dt") {
    sc.integrator.dt = parse_number(value, line);
  } else if (key == "scheme") {
    if (value == "rk4")
      sc.integrator.scheme = Scheme::rk4_fixed;
    else if (value == "euler")
      sc.integrator.scheme = Scheme::euler;
    else
      throw config_error("unknown scheme '" + value + "'", line);
  } else if (key == "record_every") {
    sc.integrator.record_every = parse_int(value, line);
  } else if (key == "collision_floor") {
    sc.integrator.collision_floor = parse_number(value, line);
  } else if (key == "refinements") {
    sc.refinements.clear();
    std::istringstream in(value);
    std::string tok;
    while (in >> tok) {
      if (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (tok.empty()) continue;
      sc.refinements.push_back(parse_int(tok, line));
    }
    if (sc.refinements.empty()) throw config_error("refinements must not be empty", line);
  } else if (key == "k_ref") {
    sc.reference_side = parse_int(value, line);
  } else if (key == "mass_bound") {
    sc.mass_bound = parse_number(value, line);
  } else if (key == "pos_bound") {
    sc.pos_bound = parse_number(value, line);
  } else if (key == "solver") {
    sc.solver = value;
  } else if (key == "mass_tol") {
    sc.tol.invariants.mass = parse_number(value, line);
  } else if (key == "env_tol") {
    sc.tol.invariants.envelope = parse_number(value, line);
  } else if (key == "pos_tol") {
    sc.tol.invariants.position = parse_number(value, line);
  } else if (key == "sep_tol") {
    sc.tol.invariants.separation = parse_number(value, line);
  } else if (key == "cross_tol") {
    sc.tol.cross = parse_number(value, line);
  } else if (key == "picard_tol") {
    sc.picard.tolerance = parse_number(value, line);
  } else if (key == "picard_max_iter") {
    sc.picard.max_iterations = parse_int(value, line);
  } else if (key == "picard_window") {
    sc.picard.window = parse_number(value, line);
  } else if (key == "amp" || key == "steep" || key == "eps" || key == "x1" ||
             key == "x2" || key == "m1" || key == "m2") {
    sc.family_params[key] = parse_number(value, line);
  } else {
    throw config_error("unknown key '" + key + "'", line);
  }
}

}  // namespace detail

inline std::vector<Scenario> parse_config(std::istream& in) {
  std::vector<Scenario> scenarios;
  std::string line;
  int lineno = 0;
  bool in_section = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw config_error("unterminated section header", lineno);
      const std::string name = detail::trim(text.substr(1, text.size() - 2));
      if (name.empty()) throw config_error("empty section name", lineno);
      scenarios.emplace_back();
      scenarios.back().name = name;
      in_section = true;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw config_error("expected 'key = value', got '" + text + "'", lineno);
    if (!in_section) throw config_error("entry outside of a [scenario] section", lineno);
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw config_error("empty key", lineno);
    if (value.empty()) throw config_error("empty value for key '" + key + "'", lineno);
    detail::apply_key(scenarios.back(), key, value, lineno);
  }
  for (auto& sc : scenarios) sc.validate();
  return scenarios;
}

inline std::vector<Scenario> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  return parse_config(in);
}

// Selects a scenario: from the config file when given, otherwise from the
// registry. An empty name is accepted when the file defines one section.
inline Scenario select_scenario(const std::optional<std::filesystem::path>& config,
                                const std::string& name) {
  if (config) {
    const std::vector<Scenario> all = parse_config_file(*config);
    if (all.empty()) throw config_error("config file defines no scenarios");
    if (name.empty()) {
      if (all.size() == 1) return all.front();
      throw config_error("config defines several scenarios; pick one with --scenario");
    }
    for (const auto& sc : all)
      if (sc.name == name) return sc;
    throw config_error("scenario '" + name + "' not found in config file");
  }
  if (name.empty()) throw config_error("either --config or --scenario is required");
  return builtin_scenario(name);
}

}  // namespace paircomp
