#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rklab/errors.hpp"
#include "rklab/levy_path.hpp"

namespace rklab {

/// The exploration measure rho_t stored bottom to top as a stack.
///
/// A continuous segment stands for beta * Lebesgue on a height interval of
/// length `height_length` stacked on everything below it; an atom sits at
/// `height` and carries no height extent. H is the sum of segment lengths
/// and the total mass is beta * H plus the atom masses.
class ExplorationStack {
 public:
  struct Segment {
    double height_length = 0.0;
  };
  struct Atom {
    double mass = 0.0;
    double height = 0.0;
  };
  using Record = std::variant<Segment, Atom>;

  /// Slack used when deciding that a record has been eroded away.
  static constexpr double kSlack = 1e-12;

  explicit ExplorationStack(double beta);

  double beta() const { return beta_; }
  double height() const { return height_; }
  double total_mass() const { return mass_; }
  bool empty() const { return records_.empty(); }
  const std::vector<Record>& records() const { return records_; }

  /// Continuous move of xi by d_xi: growth extends the top segment, a
  /// decrease erodes mass from the top. Returns the part of a decrease that
  /// the stack could not absorb (it lowers the running infimum).
  double advance_continuous(double d_xi);

  /// Upward jump of size z: an atom of mass z at the current height.
  void push_jump(double z);

  /// k_a: removes mass a from the top, clamped at the empty measure.
  void truncate_mass(double a);

  /// mu([0, x]).
  double cumulative_mass(double x) const;

  /// Appends `upper` above this measure, shifting its atoms by height().
  void append(const ExplorationStack& upper);

 private:
  double erode(double amount);

  double beta_;
  double height_ = 0.0;
  double mass_ = 0.0;
  std::size_t segments_ = 0;
  std::vector<Record> records_;
};

ExplorationStack truncate_mass(ExplorationStack stack, double a);
ExplorationStack concatenate(const ExplorationStack& lower, const ExplorationStack& upper);

/// Height process of one path together with everything the local-time and
/// stochastic-integral estimators need, indexed by grid cell.
struct HeightProcess {
  double dt = 0.0;
  double beta = 0.0;
  std::vector<double> height;      // H at grid points; the last one is T_x when stopped
  std::vector<double> duration;    // per cell: dt, or the partial length of the stopping cell
  std::vector<double> continuous;  // per cell: continuous increment of xi actually applied
  std::vector<double> jump_height; // H_{t_i} for each processed jump, aligned with path.jumps
  double end_value = 0.0;          // xi at the last point
  double infimum = 0.0;            // I_0 at the last point
  double end_time = 0.0;
  bool stopped = false;

  std::size_t cells() const { return duration.size(); }
};

/// Single forward pass over a path driving advance_continuous/push_jump in
/// the order the events happen inside each cell. Amortized O(1) per step.
class Explorer {
 public:
  /// `beta` is the path's effective_beta(); it must be positive.
  explicit Explorer(double beta, double dt);

  /// Processes the next cell of `path`. With `stop_level`, stops at the
  /// first time xi reaches it and returns false from then on.
  bool step(const LevyPath& path, std::optional<double> stop_level = std::nullopt);

  const HeightProcess& result() const { return hp_; }
  HeightProcess take() { return std::move(hp_); }
  const ExplorationStack& stack() const { return stack_; }
  std::size_t next_cell() const { return hp_.cells(); }

 private:
  bool advance(double d, double f_from, double f_to, std::optional<double> stop_level,
               double& theta);

  ExplorationStack stack_;
  HeightProcess hp_;
  std::size_t next_jump_ = 0;
  double xi_ = 0.0;
};

/// Explores the whole path (or up to the first passage at stop_level).
HeightProcess explore(const LevyPath& path, std::optional<double> stop_level = std::nullopt);

/// H at every grid time of the path. Throws UnsupportedConfiguration when
/// the path has no Gaussian part.
Eigen::VectorXd height_trajectory(const LevyPath& path);

}  // namespace rklab
