#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "rklab/config.hpp"
#include "rklab/exploration.hpp"
#include "rklab/levy_path.hpp"
#include "rklab/local_time.hpp"

namespace rklab {

enum class CellRule {
  within,      // |stat - oracle| <= tol
  at_most,     // stat <= oracle + tol
  decreasing,  // stat < oracle, oracle being the previous stage
  report,      // informational
};

struct ReportCell {
  nlohmann::ordered_json params;
  double stat = 0.0;
  double oracle = 0.0;
  double std_error = 0.0;
  double tol = 0.0;
  CellRule rule = CellRule::within;
  bool pass = true;
};

struct MonteCarloReport {
  std::string check;
  std::size_t M = 0;
  std::vector<ReportCell> cells;
  std::size_t discarded = 0;
  std::vector<std::string> flags;  // reasons the report is invalid
  nlohmann::ordered_json config;

  ReportCell& add(nlohmann::ordered_json params, double stat, double oracle, double std_error, double tol,
                  CellRule rule = CellRule::within);
  bool valid() const { return flags.empty(); }
  bool pass() const;
  nlohmann::ordered_json to_json() const;
};

enum class Suite { ray_knight, theorem1, tanaka, noise, poisson_marks, reflected, example };

const std::vector<Suite>& all_suites();
std::string suite_name(Suite s);
/// Throws ConfigError on an unknown name.
Suite parse_suite(const std::string& name);

MonteCarloReport ray_knight_report(const RunConfig& cfg, unsigned jobs);
MonteCarloReport theorem1_report(const RunConfig& cfg, unsigned jobs);
MonteCarloReport tanaka_refinement_study(const RunConfig& cfg, unsigned jobs);
MonteCarloReport white_noise_check(const RunConfig& cfg, unsigned jobs);
MonteCarloReport poisson_marks_check(const RunConfig& cfg, unsigned jobs);
MonteCarloReport reflected_supremum_check(const RunConfig& cfg, unsigned jobs);
MonteCarloReport brownian_example_check(const RunConfig& cfg, unsigned jobs);

/// Dispatch; precondition failures throw PreconditionError.
MonteCarloReport run_suite(Suite s, const RunConfig& cfg, unsigned jobs);

// Per-path pieces, exposed for tests.

/// Level-window width used by a suite at step dt.
double suite_bandwidth(const HarnessConfig& h, double dt, double beta, bool identity_suite);

/// x + sum over [0, T_x] of P(H <= A) dxi, A uniform on the window; the
/// window average of the right side of the first-passage local time identity.
double theorem1_rhs(const LevyPath& path, const HeightProcess& hp, double x, const LevelWindow& window);

/// Window occupation minus theorem1_rhs for each level.
std::vector<double> theorem1_residual(const LevyPath& path, const HeightProcess& hp, double x,
                                      const std::vector<double>& levels, double width);

/// S^c_t = S_t - sum of the supremum jumps, and the occupation estimate of
/// the local time at 0 of R = S - xi over (0, eps], both at grid time cells*dt.
struct ReflectedIdentity {
  double continuous_supremum = 0.0;
  double local_time_at_zero = 0.0;
};
ReflectedIdentity reflected_identity(const LevyPath& path, std::size_t cells, double eps);

/// Supremum law of mu t + sigma W_t: P(S_t >= y) and E S_t.
double drifted_supremum_tail(double y, double mu, double sigma2, double t);
double drifted_supremum_mean(double mu, double sigma2, double t);

}  // namespace rklab
