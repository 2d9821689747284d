#include "rklab/local_time.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace rklab {

LevelGrid::LevelGrid(double w, double max_level) : width(w) {
  if (!(w > 0.0)) throw std::invalid_argument("level bin width must be positive");
  bins = static_cast<std::size_t>(std::ceil(max_level / w - 1e-9));
  bins = std::max<std::size_t>(bins, 1);
}

std::optional<std::size_t> LevelGrid::bin_of(double h) const {
  if (!(h > 0.0)) return std::nullopt;
  const double q = std::ceil(h / width) - 1.0;
  if (q >= static_cast<double>(bins)) return std::nullopt;
  return static_cast<std::size_t>(std::max(q, 0.0));
}

std::size_t LevelGrid::bin_at(double level) const {
  return static_cast<std::size_t>(std::llround(level / width));
}

double default_bin_width(double dt, double beta) {
  return std::max(std::cbrt(dt), 4.0 * std::sqrt(dt) / beta);
}

double aligned_bin_width(double width, const std::vector<double>& levels) {
  double unit = 0.0;
  for (double a : levels)
    if (a > 0.0 && (unit == 0.0 || a < unit)) unit = a;
  if (unit == 0.0) return width;
  return unit / std::max(1.0, std::ceil(unit / width - 1e-9));
}

LocalTimeField occupation_local_time(const HeightProcess& hp, const LevelGrid& grid, double t_max,
                                     std::size_t stride) {
  if (hp.cells() == 0) throw std::invalid_argument("occupation_local_time: empty trajectory");
  stride = std::max<std::size_t>(stride, 1);
  LocalTimeField f;
  f.level_edges = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(grid.bins + 1), 0.0,
                                             grid.width * static_cast<double>(grid.bins));
  std::vector<double> occ(grid.bins, 0.0);
  std::vector<double> times{0.0};
  std::vector<std::vector<double>> rows{occ};
  double t = 0.0;
  std::size_t k = 0;
  for (; k < hp.cells() && t < t_max; ++k) {
    const double d = std::min(hp.duration[k], t_max - t);
    if (auto b = grid.bin_of(hp.height[k]))
      occ[*b] += d;
    else if (hp.height[k] == 0.0)
      f.time_at_zero += d;
    t += d;
    if ((k + 1) % stride == 0) {
      times.push_back(t);
      rows.push_back(occ);
    }
  }
  if (k % stride != 0) {
    times.push_back(t);
    rows.push_back(occ);
  }
  f.times = Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size()));
  f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(grid.bins));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t b = 0; b < grid.bins; ++b)
      f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = rows[i][b] / grid.width;
  return f;
}

Eigen::VectorXd occupation_profile(const HeightProcess& hp, const LevelGrid& grid) {
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.bins));
  for (std::size_t k = 0; k < hp.cells(); ++k)
    if (auto b = grid.bin_of(hp.height[k])) occ[static_cast<Eigen::Index>(*b)] += hp.duration[k];
  return occ / grid.width;
}

Eigen::VectorXd profile_at_hitting(const LevyPath& path, double x, const LevelGrid& grid) {
  const HeightProcess hp = explore(path, -x);
  if (!hp.stopped) throw PreconditionError("profile_at_hitting: path does not reach -x");
  return occupation_profile(hp, grid);
}

double LevelWindow::above(double h) const {
  if (width == 0.0) return h > level ? 1.0 : 0.0;
  return std::clamp((h - level) / width, 0.0, 1.0);
}

double LevelWindow::excess(double h) const {
  if (width == 0.0) return std::max(h - level, 0.0);
  if (h <= level) return 0.0;
  if (h >= level + width) return h - level - 0.5 * width;
  const double d = h - level;
  return 0.5 * d * d / width;
}

ErosionState erosion_state(const LevyPath& path, const HeightProcess& hp) {
  const std::size_t jumps = hp.jump_height.size();
  ErosionState out;
  out.remaining.assign(jumps, 0.0);
  double m = hp.end_value;
  std::size_t k = hp.cells();  // grid vertices strictly before the end still to visit: 1 .. k-1
  for (std::size_t j = jumps; j-- > 0;) {
    const JumpRecord& J = path.jumps[j];
    for (; k > J.cell + 1; --k) m = std::min(m, path.values[k - 1]);
    const double inf_after = std::min(m, J.pre_value + J.size);
    out.remaining[j] = std::max(inf_after - J.pre_value, 0.0);
    m = std::min(inf_after, J.pre_value);
  }
  for (; k > 0; --k) m = std::min(m, path.values[k - 1]);
  out.infimum = m;
  return out;
}

double tanaka_local_time(const LevyPath& path, const HeightProcess& hp, const LevelWindow& w,
                         TanakaVariant variant) {
  if (!(hp.beta > 0.0)) throw UnsupportedConfiguration("Tanaka formulas need beta > 0");
  const bool plus = variant == TanakaVariant::plus;
  // weight of an increment at height h: 1{h > a} for plus, 1{h <= a} for minus
  auto weight = [&](double h) { return plus ? w.above(h) : 1.0 - w.above(h); };
  CompensatedSum integral;
  for (std::size_t k = 0; k < hp.cells(); ++k) integral.add(weight(hp.height[k]) * hp.continuous[k]);
  const ErosionState er = erosion_state(path, hp);
  CompensatedSum atoms;
  for (std::size_t j = 0; j < hp.jump_height.size(); ++j) {
    const double g = weight(hp.jump_height[j]);
    integral.add(g * path.jumps[j].size);
    atoms.add(g * er.remaining[j]);
  }
  const double h = hp.height.back();
  if (plus) return hp.beta * w.excess(h) - integral.value() + atoms.value();
  return -hp.beta * (h - w.excess(h)) + integral.value() - er.infimum - atoms.value();
}

double jump_erosion_identity_residual(const LevyPath& path, const HeightProcess& hp, double width) {
  const ErosionState er = erosion_state(path, hp);
  double worst = 0.0;
  for (std::size_t j = 0; j < hp.jump_height.size(); ++j) {
    if (!(er.remaining[j] > 0.0)) continue;
    const JumpRecord& J = path.jumps[j];
    const double lhs = er.remaining[j] - J.size;  // I_{t_i}(t) - xi_{t_i}
    const double lo = hp.jump_height[j];
    const LevelWindow win{lo, width};
    // occupation of (h_i, h_i + width] after the jump: the jump's own cell
    // counts from the jump on
    double occ = 0.0;
    for (std::size_t k = J.cell; k < hp.cells(); ++k) {
      const double d = k == J.cell ? hp.duration[k] * (1.0 - J.fraction) : hp.duration[k];
      const double h = hp.height[k == J.cell ? k + 1 : k];
      if (h > lo && h <= lo + win.width) occ += d;
    }
    worst = std::max(worst, std::abs(lhs + occ / width));
  }
  return worst;
}

double window_occupation(const HeightProcess& hp, const LevelWindow& window) {
  if (!(window.width > 0.0)) throw std::invalid_argument("window_occupation: width must be positive");
  CompensatedSum s;
  for (std::size_t k = 0; k < hp.cells(); ++k) {
    const double h = hp.height[k];
    if (h > window.level && h <= window.level + window.width) s.add(hp.duration[k]);
  }
  return s.value() / window.width;
}

double occupation_below(const HeightProcess& hp, double a) {
  CompensatedSum s;
  for (std::size_t k = 0; k < hp.cells(); ++k)
    if (hp.height[k] <= a) s.add(hp.duration[k]);
  return s.value();
}

void write_local_time_csv(std::ostream& os, const LocalTimeField& field) {
  os.precision(17);
  os << "time,level,local_time\n";
  for (Eigen::Index i = 0; i < field.values.rows(); ++i)
    for (Eigen::Index b = 0; b < field.values.cols(); ++b)
      os << field.times[i] << ',' << field.level_edges[b] << ',' << field.values(i, b) << '\n';
}

void write_profile_csv(std::ostream& os, const LevelGrid& grid, const Eigen::VectorXd& profile) {
  os.precision(17);
  os << "level,local_time\n";
  for (Eigen::Index b = 0; b < profile.size(); ++b)
    os << grid.lower_edge(static_cast<std::size_t>(b)) << ',' << profile[b] << '\n';
}

}  // namespace rklab
