#include "rklab/cb_flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace rklab {
namespace {

// Coefficients of one Euler step per unit mass.
struct StepModel {
  JumpMeasure big;       // retained jumps
  double rate = 0.0;     // big(0, inf)
  double drift = 0.0;    // -alpha - int z big(dz)
  double beta = 0.0;     // Gaussian coefficient, with the small-jump correction
};

StepModel step_model(const BranchingMechanism& mech, const SimConfig& cfg) {
  mech.validate();
  cfg.validate();
  const double delta = effective_truncation(mech, cfg);
  const auto sim = truncated_mechanism(mech, delta, cfg.small_jump_mode == SmallJumpMode::gaussian_correction);
  StepModel m;
  m.big = sim.jumps;
  m.rate = sim.jumps.tail_mass(0.0);
  m.drift = -mech.alpha - sim.jumps.tail_first_moment(0.0);
  m.beta = sim.beta;
  return m;
}

}  // namespace

double CBTrajectory::at(double t) const {
  const auto k = static_cast<std::size_t>(std::llround(t / dt));
  return values.at(std::min(k, values.size() - 1));
}

CBTrajectory simulate_cb(const BranchingMechanism& mech, double x, const SimConfig& cfg, std::uint64_t index) {
  if (!(x >= 0.0)) throw std::domain_error("simulate_cb: x must be >= 0");
  const StepModel m = step_model(mech, cfg);
  Philox4x32 rng(cfg.seed, stream_id(StreamDomain::cb_process, index));
  std::normal_distribution<double> gauss;
  const std::size_t n = cfg.steps();
  const double dt = cfg.dt;
  CBTrajectory out;
  out.dt = dt;
  out.x0 = x;
  out.values.reserve(n + 1);
  out.values.push_back(x);
  double X = x;
  for (std::size_t k = 0; k < n; ++k) {
    if (X > 0.0) {
      double next = X + m.drift * X * dt;
      if (m.beta > 0.0) next += std::sqrt(2.0 * m.beta * X * dt) * gauss(rng);
      if (m.rate > 0.0) {
        const int count = std::poisson_distribution<int>(X * m.rate * dt)(rng);
        for (int i = 0; i < count; ++i) {
          const double z = sample_jump_size(m.big, m.rate, rng);
          next += z;
          out.jump_log.emplace_back((static_cast<double>(k) + 0.5) * dt, z);
        }
      }
      X = std::max(next, 0.0);
    }
    out.values.push_back(X);
  }
  return out;
}

FlowEnsemble simulate_flow(const BranchingMechanism& mech, const std::vector<double>& xs, const SimConfig& cfg,
                           std::uint64_t index) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] >= 0.0)) throw std::domain_error("simulate_flow: masses must be >= 0");
    if (i > 0 && xs[i] < xs[i - 1]) throw std::domain_error("simulate_flow: masses must be ascending");
  }
  const StepModel m = step_model(mech, cfg);
  Philox4x32 rng(cfg.seed, stream_id(StreamDomain::cb_flow, index));
  std::normal_distribution<double> gauss;
  const std::size_t n = cfg.steps();
  const double dt = cfg.dt;
  const std::size_t q = xs.size();
  FlowEnsemble out;
  out.dt = dt;
  out.x0 = xs;
  out.values.assign(q, {});
  for (std::size_t i = 0; i < q; ++i) {
    out.values[i].reserve(n + 1);
    out.values[i].push_back(xs[i]);
  }
  std::vector<double> layer(q), next(q);
  for (std::size_t i = 0; i < q; ++i) layer[i] = i == 0 ? xs[0] : xs[i] - xs[i - 1];
  for (std::size_t k = 0; k < n; ++k) {
    const double top = q ? out.values[q - 1].back() : 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      next[i] = layer[i] + m.drift * layer[i] * dt;
      const double g = gauss(rng);  // drawn for every layer to keep the stream layout fixed
      if (layer[i] > 0.0 && m.beta > 0.0) next[i] += std::sqrt(2.0 * m.beta * layer[i] * dt) * g;
    }
    if (m.rate > 0.0 && top > 0.0) {
      const int count = std::poisson_distribution<int>(top * m.rate * dt)(rng);
      for (int c = 0; c < count; ++c) {
        const double u = rng.uniform_open() * top;
        const double z = sample_jump_size(m.big, m.rate, rng);
        // first trajectory whose mass reaches u owns the mark
        for (std::size_t i = 0; i < q; ++i) {
          if (u <= out.values[i].back()) {
            next[i] += z;
            break;
          }
        }
      }
    }
    double cum = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      layer[i] = layer[i] > 0.0 ? std::max(next[i], 0.0) : 0.0;
      cum += layer[i];
      out.values[i].push_back(cum);
    }
  }
  return out;
}

void write_cb_csv(std::ostream& os, const CBTrajectory& traj) {
  os.precision(17);
  os << "time,value\n";
  for (std::size_t k = 0; k < traj.values.size(); ++k)
    os << static_cast<double>(k) * traj.dt << ',' << traj.values[k] << '\n';
}

void write_flow_csv(std::ostream& os, const FlowEnsemble& flow) {
  os.precision(17);
  os << "time,x0,value\n";
  const std::size_t n = flow.values.empty() ? 0 : flow.values[0].size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < flow.x0.size(); ++i)
      os << static_cast<double>(k) * flow.dt << ',' << flow.x0[i] << ',' << flow.values[i][k] << '\n';
}

}  // namespace rklab
