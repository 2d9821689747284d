#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rklab/levy_path.hpp"
#include "rklab/mechanism.hpp"

namespace rklab {

/// Box (a_lo, a_hi] x (z_lo, z_hi] x [u_lo, u_hi) for the Poisson mark counts.
struct MarkBox {
  double a_lo = 0.0, a_hi = 1.0;
  double z_lo = 0.5, z_hi = 1.5;
  double u_lo = 0.0, u_hi = 1.0;
};

struct NoiseSpec {
  double a = 1.0;
  double u_max = 1.0;
  double horizon = 400.0;  // cap on the time spent waiting for saturation
  std::optional<double> dt;
};

struct ReflectedSpec {
  double time = 1.0;
  std::vector<double> dts{1e-3, 2.5e-4, 6.25e-5};
  std::size_t paths = 2000;
  double bound = 0.05;  // relative deviation allowed at the finest dt
  std::optional<BranchingMechanism> jump_mechanism;
};

struct ExampleSpec {
  double time = 1.0;
  double dt = 1e-4;
  std::size_t paths = 5000;
  double level = 0.01;  // KS significance level
};

struct PoissonSpec {
  std::optional<BranchingMechanism> mechanism;
  std::vector<MarkBox> boxes{MarkBox{}};
  double horizon = 400.0;
  std::optional<double> dt;
};

struct HarnessConfig {
  double x = 1.0;
  std::vector<double> levels{0.25, 0.5, 1.0};
  std::vector<double> lambdas{0.5, 1.0, 2.0};
  std::size_t paths = 4000;
  std::vector<double> dts{1e-3, 5e-4, 2.5e-4};
  std::string output = "out";

  std::optional<double> bandwidth;        // fixed level-bin width
  double bandwidth_scale = 1.0;           // multiplies the default width rule
  double identity_bandwidth_scale = 2.0;  // same, for the pathwise identity suites

  double oracle_alpha_shift = 0.0;  // perturbs alpha in every oracle (negative controls)
  double mean_budget = 0.02;
  double laplace_budget = 0.05;
  double residual_bound = 0.05;  // theorem1: mean |residual| <= bound * x at the finest dt
  double discard_limit = 0.05;
  double coverage_limit = 0.9;

  NoiseSpec noise;
  PoissonSpec poisson;
  ReflectedSpec reflected;
  ExampleSpec example;
};

struct RunConfig {
  BranchingMechanism mechanism;
  SimConfig sim;
  HarnessConfig harness;
};

/// Parsers; errors are ConfigError naming the offending field.
BranchingMechanism parse_mechanism(const nlohmann::json& j, const std::string& where = "mechanism");
SimConfig parse_sim(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json mechanism_to_json(const BranchingMechanism& m);
nlohmann::ordered_json sim_to_json(const SimConfig& s);

}  // namespace rklab
