#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rklab/errors.hpp"
#include "rklab/mechanism.hpp"
#include "rklab/random.hpp"

namespace rklab {

enum class SmallJumpMode { drop_compensated, gaussian_correction };

struct SimConfig {
  double dt = 1e-3;
  double horizon = 10.0;
  /// Jumps of size <= truncation_delta are not simulated. Unset means the
  /// default from default_truncation().
  std::optional<double> truncation_delta;
  SmallJumpMode small_jump_mode = SmallJumpMode::drop_compensated;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t steps() const;
};

/// Smallest truncation keeping at most 0.1 expected jumps per grid cell
/// (0 when the Levy measure is already finite enough).
double default_truncation(const BranchingMechanism& mech, double dt);

/// Truncation actually used for `cfg`; throws when a power law reaches
/// down to zero and no positive truncation is available.
double effective_truncation(const BranchingMechanism& mech, const SimConfig& cfg);

struct JumpRecord {
  std::size_t cell = 0;
  /// Position inside the cell as a multiple of 2^-52 in (0, 1).
  double fraction = 0.0;
  double size = 0.0;
  /// xi_{t_i-}
  double pre_value = 0.0;

  double time(double dt) const { return (static_cast<double>(cell) + fraction) * dt; }
};

/// One discretized sample path of xi on the grid 0, dt, 2dt, ...
///
/// Cell k carries the continuous increment applied_drift*dt +
/// gaussian_coeff*brownian_increments[k], spread linearly over the cell,
/// and the jumps recorded for it at their exact positions. Grid values and
/// pre-jump values are rebuilt from those components in one fixed order, so
/// the path is reproducible bit for bit.
struct LevyPath {
  double dt = 0.0;
  double applied_drift = 0.0;
  double gaussian_coeff = 0.0;
  std::vector<double> values;             // size cells()+1, values[0] = 0
  std::vector<double> brownian_increments;  // N(0, dt) per cell
  std::vector<JumpRecord> jumps;          // ordered by time

  std::size_t cells() const { return brownian_increments.size(); }
  double end_time() const { return static_cast<double>(cells()) * dt; }
  double continuous_increment(std::size_t cell) const {
    return applied_drift * dt + gaussian_coeff * brownian_increments[cell];
  }
  /// beta of the Gaussian part actually simulated (gaussian_coeff^2 / 2).
  double effective_beta() const { return 0.5 * gaussian_coeff * gaussian_coeff; }

  /// Recomputes values and pre-jump values from the stored components.
  void rebuild();
};

/// Jump size from pi normalized by `rate` = pi(0, inf) (finite): categorical
/// over the atoms, inverse CDF for the power law.
double sample_jump_size(const JumpMeasure& pi, double rate, Philox4x32& rng);

/// Grows one path cell by cell from its own Philox stream.
class PathSampler {
 public:
  PathSampler(const BranchingMechanism& mech, const SimConfig& cfg, std::uint64_t stream);

  /// Empty path carrying the drift and Gaussian coefficient.
  LevyPath start() const;
  /// Appends one cell; returns false once the horizon is reached.
  bool extend(LevyPath& path);

  const BranchingMechanism& simulated_mechanism() const { return simulated_; }

 private:
  BranchingMechanism simulated_;
  double dt_;
  std::size_t max_cells_;
  double jump_rate_;
  double drift_;
  double coeff_;
  Philox4x32 rng_;
  std::normal_distribution<double> gauss_;
  std::poisson_distribution<int> jump_count_;
  std::vector<std::pair<double, double>> scratch_;
};

/// Path on [0, horizon] from stream `stream_id(levy_path, path_index)`.
LevyPath sample_path(const BranchingMechanism& mech, const SimConfig& cfg,
                     std::uint64_t path_index = 0, StreamDomain domain = StreamDomain::levy_path);

/// Path stopped after the first cell in which xi reaches -x (or at the horizon).
LevyPath sample_path_until_hit(const BranchingMechanism& mech, const SimConfig& cfg, double x,
                               std::uint64_t path_index = 0);

/// S_t = sup_{s<=t} xi_s at grid times, including jump tops inside cells.
Eigen::VectorXd supremum_process(const LevyPath& path);
/// R_t = S_t - xi_t at grid times.
Eigen::VectorXd reflected_process(const LevyPath& path);

/// Time-reversed path s -> xi_t - xi_{(t-s)-} on [0, t], t = cell_count * dt.
LevyPath time_reverse(const LevyPath& path, std::size_t cell_count);

/// inf of xi over [s, t] (grid indices), pre-jump values included.
double running_infimum(const LevyPath& path, std::size_t s, std::size_t t);

/// First passage below -x of the piecewise-linear path (linear inside each
/// continuous piece). Empty when the path never gets there.
struct Hit {
  std::size_t cell = 0;  // cell containing the crossing
  double fraction = 0.0;  // position of the crossing inside that cell
  double time = 0.0;
};
std::optional<Hit> hitting_time(const LevyPath& path, double x);

void write_path_csv(std::ostream& os, const LevyPath& path);
void write_jumps_csv(std::ostream& os, const LevyPath& path);

}  // namespace rklab
