#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rklab/exploration.hpp"
#include "rklab/levy_path.hpp"
#include "rklab/stats.hpp"

namespace rklab {

/// Level bins (k*width, (k+1)*width], k = 0 .. bins-1. H = 0 lies in no bin.
struct LevelGrid {
  double width = 0.0;
  std::size_t bins = 0;

  LevelGrid() = default;
  /// Enough bins to cover (0, max_level].
  LevelGrid(double width, double max_level);

  double lower_edge(std::size_t k) const { return static_cast<double>(k) * width; }
  /// Bin holding level h, if any.
  std::optional<std::size_t> bin_of(double h) const;
  /// Bin whose lower edge is `level` (levels are expected on the edge grid).
  std::size_t bin_at(double level) const;
};

/// max(dt^(1/3), 4 dt^(1/2) / beta).
double default_bin_width(double dt, double beta);

/// Largest width not above `width` that puts every level of `levels` on a
/// bin edge (levels are assumed commensurate with the first positive one).
double aligned_bin_width(double width, const std::vector<double>& levels);

/// Binned occupation local time. values(i, k) = time spent by H in bin k
/// up to times[i], divided by the width.
struct LocalTimeField {
  Eigen::VectorXd level_edges;  // bins + 1 edges
  Eigen::VectorXd times;
  Eigen::MatrixXd values;
  double time_at_zero = 0.0;    // time with H exactly 0 up to the last time

  double width() const { return level_edges[1] - level_edges[0]; }
};

/// Occupation field sampled every `stride` cells (and at the last one). Each
/// cell contributes its duration at the left-point height.
LocalTimeField occupation_local_time(const HeightProcess& hp, const LevelGrid& grid,
                                     double t_max = std::numeric_limits<double>::infinity(),
                                     std::size_t stride = 1);

/// Final occupation profile of a height process: bin k -> L(bin k).
Eigen::VectorXd occupation_profile(const HeightProcess& hp, const LevelGrid& grid);

/// Profile a -> L_{T_x}(a) of a path that reaches -x. Throws
/// PreconditionError when it does not.
Eigen::VectorXd profile_at_hitting(const LevyPath& path, double x, const LevelGrid& grid);

/// Level a, optionally smeared uniformly over (a, a + width]. Width 0 is the
/// point level; a positive width turns every Tanaka term into its average
/// over the window, which is what a bin of the occupation field estimates.
struct LevelWindow {
  double level = 0.0;
  double width = 0.0;

  /// P(h > A) for A uniform on the window.
  double above(double h) const;
  /// E (h - A)^+.
  double excess(double h) const;
};

enum class TanakaVariant { plus, minus };

/// Tanaka local time at the end of `hp` (the explored prefix of `path`).
///
/// plus:  beta (H_t - a)^+ - int 1{H > a} dxi + U_t(a)
/// minus: -beta min(H_t, a) + int 1{H <= a} dxi - I_0(t) - V_t(a)
/// with U, V the live atom masses (z_i + I_{t_i}(t) - xi_{t_i})^+ above and
/// below a. Grid increments use the left-point height, jumps the height at
/// the jump.
double tanaka_local_time(const LevyPath& path, const HeightProcess& hp, const LevelWindow& window,
                         TanakaVariant variant);

/// Live atom masses (z_i + I_{t_i}(t) - xi_{t_i})^+ of the processed jumps,
/// computed from path infima at the end of `hp`, plus I_0(t).
struct ErosionState {
  std::vector<double> remaining;
  double infimum = 0.0;
};
ErosionState erosion_state(const LevyPath& path, const HeightProcess& hp);

/// max over live jumps of |(I_{t_i}(t) - xi_{t_i}) - (L_{t_i}(h_i) - L_t(h_i))|,
/// local times taken on the window (h_i, h_i + width].
double jump_erosion_identity_residual(const LevyPath& path, const HeightProcess& hp, double width);

/// Occupation local time of the window (level, level + width] at the end of
/// `hp`: time spent there divided by the width.
double window_occupation(const HeightProcess& hp, const LevelWindow& window);

/// Time with H <= a (left-point rule).
double occupation_below(const HeightProcess& hp, double a);

void write_local_time_csv(std::ostream& os, const LocalTimeField& field);
void write_profile_csv(std::ostream& os, const LevelGrid& grid, const Eigen::VectorXd& profile);

}  // namespace rklab
