#include "rklab/exploration.hpp"

#include <algorithm>
#include <cmath>

namespace rklab {

ExplorationStack::ExplorationStack(double beta) : beta_(beta) {
  if (!(beta > 0.0)) throw UnsupportedConfiguration("exploration stack needs beta > 0");
}

double ExplorationStack::advance_continuous(double d_xi) {
  if (d_xi > 0.0) {
    const double len = d_xi / beta_;
    if (!records_.empty() && std::holds_alternative<Segment>(records_.back())) {
      std::get<Segment>(records_.back()).height_length += len;
    } else {
      records_.emplace_back(Segment{len});
      ++segments_;
    }
    height_ += len;
    mass_ += d_xi;
    return 0.0;
  }
  return erode(-d_xi);
}

double ExplorationStack::erode(double amount) {
  while (amount > 0.0 && !records_.empty()) {
    Record& top = records_.back();
    if (auto* atom = std::get_if<Atom>(&top)) {
      if (atom->mass <= amount + kSlack) {
        amount = std::max(amount - atom->mass, 0.0);
        mass_ -= atom->mass;
        records_.pop_back();
      } else {
        atom->mass -= amount;
        mass_ -= amount;
        amount = 0.0;
      }
    } else {
      auto& seg = std::get<Segment>(top);
      const double seg_mass = beta_ * seg.height_length;
      if (seg_mass <= amount + kSlack) {
        amount = std::max(amount - seg_mass, 0.0);
        mass_ -= seg_mass;
        height_ -= seg.height_length;
        records_.pop_back();
        if (--segments_ == 0) height_ = 0.0;
      } else {
        const double len = amount / beta_;
        seg.height_length -= len;
        height_ -= len;
        mass_ -= amount;
        amount = 0.0;
      }
    }
  }
  if (records_.empty()) {
    mass_ = 0.0;
    height_ = 0.0;
  }
  return amount;
}

void ExplorationStack::push_jump(double z) {
  records_.emplace_back(Atom{z, height_});
  mass_ += z;
}

void ExplorationStack::truncate_mass(double a) { erode(a); }

double ExplorationStack::cumulative_mass(double x) const {
  double base = 0.0;
  double m = 0.0;
  for (const auto& r : records_) {
    if (const auto* atom = std::get_if<Atom>(&r)) {
      if (atom->height <= x) m += atom->mass;
    } else {
      const double len = std::get<Segment>(r).height_length;
      m += beta_ * std::clamp(x - base, 0.0, len);
      base += len;
    }
  }
  return m;
}

void ExplorationStack::append(const ExplorationStack& upper) {
  const double shift = height_;
  for (const auto& r : upper.records_) {
    if (const auto* atom = std::get_if<Atom>(&r)) {
      records_.emplace_back(Atom{atom->mass, atom->height + shift});
    } else {
      records_.push_back(r);
      ++segments_;
    }
  }
  height_ += upper.height_;
  mass_ += upper.mass_;
}

ExplorationStack truncate_mass(ExplorationStack stack, double a) {
  stack.truncate_mass(a);
  return stack;
}

ExplorationStack concatenate(const ExplorationStack& lower, const ExplorationStack& upper) {
  ExplorationStack out = lower;
  out.append(upper);
  return out;
}

Explorer::Explorer(double beta, double dt) : stack_(beta) {
  hp_.dt = dt;
  hp_.beta = beta;
  hp_.height.push_back(0.0);
}

bool Explorer::advance(double d, double f_from, double f_to, std::optional<double> stop_level,
                       double& theta) {
  if (stop_level && xi_ + d <= *stop_level) {
    const double part = *stop_level - xi_;
    theta = d < 0.0 ? f_from + (f_to - f_from) * std::clamp(part / d, 0.0, 1.0) : f_from;
    stack_.advance_continuous(part);
    xi_ = *stop_level;
    hp_.infimum = std::min(hp_.infimum, xi_);
    return false;
  }
  const double deficit = stack_.advance_continuous(d);
  xi_ += d;
  if (deficit > 0.0) hp_.infimum = std::min(hp_.infimum, xi_);
  return true;
}

bool Explorer::step(const LevyPath& path, std::optional<double> stop_level) {
  if (hp_.stopped) return false;
  const std::size_t k = hp_.cells();
  if (k >= path.cells()) return false;
  if (stop_level && xi_ <= *stop_level) {
    hp_.stopped = true;
    return false;
  }
  double applied = 0.0;
  double f_prev = 0.0;
  double theta = 1.0;
  bool running = true;
  for (; next_jump_ < path.jumps.size() && path.jumps[next_jump_].cell == k; ++next_jump_) {
    const JumpRecord& jump = path.jumps[next_jump_];
    const double start = xi_;
    running = advance(jump.pre_value - xi_, f_prev, jump.fraction, stop_level, theta);
    applied += xi_ - start;
    if (!running) break;
    hp_.jump_height.push_back(stack_.height());
    stack_.push_jump(jump.size);
    xi_ = jump.pre_value + jump.size;
    f_prev = jump.fraction;
  }
  if (running) {
    const double start = xi_;
    running = advance(path.values[k + 1] - xi_, f_prev, 1.0, stop_level, theta);
    applied += xi_ - start;
    if (running) xi_ = path.values[k + 1];
  }
  hp_.continuous.push_back(applied);
  hp_.duration.push_back(running ? path.dt : theta * path.dt);
  hp_.height.push_back(stack_.height());
  hp_.end_value = xi_;
  hp_.end_time = static_cast<double>(k) * path.dt + hp_.duration.back();
  if (!running) hp_.stopped = true;
  return running;
}

HeightProcess explore(const LevyPath& path, std::optional<double> stop_level) {
  Explorer explorer(path.effective_beta(), path.dt);
  while (explorer.step(path, stop_level)) {
  }
  return explorer.take();
}

Eigen::VectorXd height_trajectory(const LevyPath& path) {
  const HeightProcess hp = explore(path);
  return Eigen::Map<const Eigen::VectorXd>(hp.height.data(), static_cast<Eigen::Index>(hp.height.size()));
}

}  // namespace rklab
