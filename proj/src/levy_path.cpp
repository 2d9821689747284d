#include "rklab/levy_path.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace rklab {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("sim.horizon must be positive");
  if (!(dt < horizon)) throw ConfigError("sim.dt must be smaller than sim.horizon");
  if (truncation_delta && !(*truncation_delta >= 0.0))
    throw ConfigError("sim.truncation_delta must be >= 0");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(std::floor(horizon / dt + 1e-9)));
}

double default_truncation(const BranchingMechanism& mech, double dt) {
  const double target = 0.1 / dt;
  const auto& pi = mech.jumps;
  if (pi.tail_mass(0.0) <= target) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (pi.tail_mass(hi) > target) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pi.tail_mass(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

double effective_truncation(const BranchingMechanism& mech, const SimConfig& cfg) {
  const double delta = cfg.truncation_delta.value_or(default_truncation(mech, cfg.dt));
  if (!std::isfinite(mech.jumps.tail_mass(delta)))
    throw ConfigError("a power law with z_min = 0 needs a positive sim.truncation_delta");
  return delta;
}

namespace {

// Appends values[k+1] and the pre-jump values of cell k. `first` indexes the
// first jump of the cell. Returns the index one past its last jump.
std::size_t apply_cell(LevyPath& path, std::size_t k, std::size_t first) {
  const double start = path.values[k];
  const double c = path.continuous_increment(k);
  double end = start + c;
  double jumped = 0.0;
  std::size_t j = first;
  for (; j < path.jumps.size() && path.jumps[j].cell == k; ++j) {
    path.jumps[j].pre_value = start + c * path.jumps[j].fraction + jumped;
    jumped += path.jumps[j].size;
    end += path.jumps[j].size;
  }
  if (path.values.size() == k + 1)
    path.values.push_back(end);
  else
    path.values[k + 1] = end;
  return j;
}

}  // namespace

void LevyPath::rebuild() {
  values.assign(1, 0.0);
  values.reserve(cells() + 1);
  std::size_t j = 0;
  for (std::size_t k = 0; k < cells(); ++k) j = apply_cell(*this, k, j);
}

PathSampler::PathSampler(const BranchingMechanism& mech, const SimConfig& cfg, std::uint64_t stream)
    : dt_(cfg.dt), max_cells_(cfg.steps()), rng_(cfg.seed, stream) {
  mech.validate();
  cfg.validate();
  const double delta = effective_truncation(mech, cfg);
  const bool correction = cfg.small_jump_mode == SmallJumpMode::gaussian_correction;
  simulated_ = truncated_mechanism(mech, delta, correction);
  jump_rate_ = simulated_.jumps.tail_mass(0.0);
  drift_ = -mech.alpha - simulated_.jumps.tail_first_moment(0.0);
  coeff_ = std::sqrt(2.0 * simulated_.beta);
  gauss_ = std::normal_distribution<double>(0.0, std::sqrt(dt_));
  if (jump_rate_ > 0.0) jump_count_ = std::poisson_distribution<int>(jump_rate_ * dt_);
}

LevyPath PathSampler::start() const {
  LevyPath p;
  p.dt = dt_;
  p.applied_drift = drift_;
  p.gaussian_coeff = coeff_;
  p.values.assign(1, 0.0);
  return p;
}

double sample_jump_size(const JumpMeasure& pi, double rate, Philox4x32& rng) {
  double u = rng.uniform_open() * rate;
  for (const auto& a : pi.atoms) {
    if (u < a.weight) return a.size;
    u -= a.weight;
  }
  if (pi.power_law) {
    const auto& p = *pi.power_law;
    const double lo = std::pow(p.z_min, -p.index);
    const double hi = std::isinf(p.z_max) ? 0.0 : std::pow(p.z_max, -p.index);
    const double w = rng.uniform_open();
    return std::pow(lo - w * (lo - hi), -1.0 / p.index);
  }
  return pi.atoms.back().size;  // rounding in the categorical draw
}

bool PathSampler::extend(LevyPath& path) {
  const std::size_t k = path.cells();
  if (k >= max_cells_) return false;
  path.brownian_increments.push_back(coeff_ > 0.0 ? gauss_(rng_) : 0.0);
  const std::size_t first = path.jumps.size();
  if (jump_rate_ > 0.0) {
    const int n = jump_count_(rng_);
    scratch_.clear();
    for (int i = 0; i < n; ++i) {
      const double f = rng_.dyadic_fraction();
      scratch_.emplace_back(f, sample_jump_size(simulated_.jumps, jump_rate_, rng_));
    }
    std::sort(scratch_.begin(), scratch_.end());
    for (const auto& [f, z] : scratch_) path.jumps.push_back({k, f, z, 0.0});
  }
  apply_cell(path, k, first);
  return true;
}

LevyPath sample_path(const BranchingMechanism& mech, const SimConfig& cfg, std::uint64_t path_index,
                     StreamDomain domain) {
  PathSampler sampler(mech, cfg, stream_id(domain, path_index));
  LevyPath path = sampler.start();
  path.values.reserve(cfg.steps() + 1);
  path.brownian_increments.reserve(cfg.steps());
  while (sampler.extend(path)) {
  }
  return path;
}

LevyPath sample_path_until_hit(const BranchingMechanism& mech, const SimConfig& cfg, double x,
                               std::uint64_t path_index) {
  PathSampler sampler(mech, cfg, stream_id(StreamDomain::levy_path, path_index));
  LevyPath path = sampler.start();
  double low = 0.0;
  while (low > -x && sampler.extend(path)) {
    const std::size_t k = path.cells() - 1;
    low = std::min(low, path.values[k + 1]);
    for (auto it = path.jumps.rbegin(); it != path.jumps.rend() && it->cell == k; ++it)
      low = std::min(low, it->pre_value);
  }
  return path;
}

Eigen::VectorXd supremum_process(const LevyPath& path) {
  const std::size_t n = path.cells();
  Eigen::VectorXd s(n + 1);
  s[0] = path.values[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double top = std::max(s[k], path.values[k + 1]);
    for (; j < path.jumps.size() && path.jumps[j].cell == k; ++j)
      top = std::max(top, path.jumps[j].pre_value + path.jumps[j].size);
    s[k + 1] = top;
  }
  return s;
}

Eigen::VectorXd reflected_process(const LevyPath& path) {
  Eigen::VectorXd s = supremum_process(path);
  for (Eigen::Index k = 0; k < s.size(); ++k) s[k] -= path.values[k];
  return s;
}

LevyPath time_reverse(const LevyPath& path, std::size_t cell_count) {
  if (cell_count > path.cells()) throw std::out_of_range("time_reverse: t beyond the path");
  LevyPath r;
  r.dt = path.dt;
  r.applied_drift = path.applied_drift;
  r.gaussian_coeff = path.gaussian_coeff;
  r.brownian_increments.assign(path.brownian_increments.rbegin() +
                                   static_cast<std::ptrdiff_t>(path.cells() - cell_count),
                               path.brownian_increments.rend());
  for (auto it = path.jumps.rbegin(); it != path.jumps.rend(); ++it) {
    if (it->cell >= cell_count) continue;
    r.jumps.push_back({cell_count - 1 - it->cell, 1.0 - it->fraction, it->size, 0.0});
  }
  r.rebuild();
  return r;
}

double running_infimum(const LevyPath& path, std::size_t s, std::size_t t) {
  if (s > t) throw std::invalid_argument("running_infimum: s > t");
  if (t > path.cells()) throw std::out_of_range("running_infimum: t beyond the path");
  double low = path.values[s];
  for (std::size_t k = s + 1; k <= t; ++k) low = std::min(low, path.values[k]);
  auto first = std::lower_bound(path.jumps.begin(), path.jumps.end(), s,
                                [](const JumpRecord& j, std::size_t c) { return j.cell < c; });
  for (auto it = first; it != path.jumps.end() && it->cell < t; ++it) low = std::min(low, it->pre_value);
  return low;
}

std::optional<Hit> hitting_time(const LevyPath& path, double x) {
  if (!(x >= 0.0)) throw std::domain_error("hitting_time: x must be >= 0");
  const double level = -x;
  if (path.values[0] <= level) return Hit{0, 0.0, 0.0};
  std::size_t j = 0;
  for (std::size_t k = 0; k < path.cells(); ++k) {
    const double c = path.continuous_increment(k);
    double p = path.values[k];
    double f = 0.0;
    auto crossing = [&](double end, double f_end) -> std::optional<Hit> {
      if (end > level) return std::nullopt;
      const double theta = std::clamp(f + (level - p) / c, f, f_end);
      return Hit{k, theta, (static_cast<double>(k) + theta) * path.dt};
    };
    for (; j < path.jumps.size() && path.jumps[j].cell == k; ++j) {
      if (auto h = crossing(path.jumps[j].pre_value, path.jumps[j].fraction)) return h;
      p = path.jumps[j].pre_value + path.jumps[j].size;
      f = path.jumps[j].fraction;
    }
    if (auto h = crossing(path.values[k + 1], 1.0)) return h;
  }
  return std::nullopt;
}

void write_path_csv(std::ostream& os, const LevyPath& path) {
  os.precision(17);
  os << "time,value\n";
  for (std::size_t k = 0; k < path.values.size(); ++k)
    os << static_cast<double>(k) * path.dt << ',' << path.values[k] << '\n';
}

void write_jumps_csv(std::ostream& os, const LevyPath& path) {
  os.precision(17);
  os << "time,size,pre_value\n";
  for (const auto& j : path.jumps) os << j.time(path.dt) << ',' << j.size << ',' << j.pre_value << '\n';
}

}  // namespace rklab
