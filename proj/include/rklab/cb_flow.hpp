#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "rklab/levy_path.hpp"

namespace rklab {

struct CBTrajectory {
  double dt = 0.0;
  double x0 = 0.0;
  std::vector<double> values;  // X at grid times 0, dt, ...
  std::vector<std::pair<double, double>> jump_log;  // (time, size)

  double at(double t) const;  // value at the grid time nearest to t
};

/// Explicit Euler scheme for the CB-process started at x, driven by the
/// stream `stream_id(cb_process, index)`:
/// X' = max(0, X - alpha X dt - C + sqrt(2 beta X dt) G + J), with J the
/// retained jumps (rate X pi(delta, inf)) and C = X dt int_delta^inf z pi.
/// Small jumps follow cfg.small_jump_mode as in the Levy path sampler.
CBTrajectory simulate_cb(const BranchingMechanism& mech, double x, const SimConfig& cfg,
                         std::uint64_t index = 0);

/// Solution flow x -> X_t(x) for several initial masses on one noise.
struct FlowEnsemble {
  double dt = 0.0;
  std::vector<double> x0;                  // ascending
  std::vector<std::vector<double>> values; // values[i][k] = X_{k dt}(x0[i])
};

/// Layered Euler scheme: the mass between consecutive trajectories is an
/// independent CB layer with its own Gaussian draw, and each jump carries a
/// mark u uniform on (0, X_max) that lands in one layer. X_t(x_i) is the sum
/// of the layers below x_i, so the flow is ordered and equal masses stay
/// identical.
FlowEnsemble simulate_flow(const BranchingMechanism& mech, const std::vector<double>& xs,
                           const SimConfig& cfg, std::uint64_t index = 0);

void write_cb_csv(std::ostream& os, const CBTrajectory& traj);
void write_flow_csv(std::ostream& os, const FlowEnsemble& flow);

}  // namespace rklab
