#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "rklab/exploration.hpp"

using namespace rklab;

namespace {

BranchingMechanism mixed() {
  BranchingMechanism m{0.3, 0.5, {}};
  m.jumps.atoms = {{1.0, 0.5}, {0.25, 2.0}};
  m.jumps.power_law = PowerLaw{0.4, 1.5, 0.0, 5.0};
  return m;
}

SimConfig config(double dt, double horizon) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.seed = 21;
  c.truncation_delta = 0.05;
  return c;
}

// Stack built by feeding a path suffix (cells from `first`) shifted to start at 0.
LevyPath suffix(const LevyPath& p, std::size_t first) {
  LevyPath s;
  s.dt = p.dt;
  s.applied_drift = p.applied_drift;
  s.gaussian_coeff = p.gaussian_coeff;
  s.brownian_increments.assign(p.brownian_increments.begin() + static_cast<std::ptrdiff_t>(first),
                               p.brownian_increments.end());
  for (const auto& j : p.jumps)
    if (j.cell >= first) s.jumps.push_back({j.cell - first, j.fraction, j.size, 0.0});
  s.rebuild();
  return s;
}

}  // namespace

TEST_CASE("empty stack") {
  ExplorationStack s(1.0);
  CHECK(s.height() == 0.0);
  CHECK(s.total_mass() == 0.0);
  CHECK(s.empty());
  CHECK_THROWS_AS(ExplorationStack(0.0), UnsupportedConfiguration);
}

TEST_CASE("up then down restores the stack") {
  ExplorationStack s(0.7);
  s.advance_continuous(0.9);
  s.push_jump(0.4);
  s.advance_continuous(0.3);
  const double h = s.height(), m = s.total_mass();
  s.advance_continuous(1.3);
  CHECK(s.advance_continuous(-1.3) == 0.0);
  CHECK(std::abs(s.height() - h) < 1e-12);
  CHECK(std::abs(s.total_mass() - m) < 1e-12);
  const double before = s.height();
  s.push_jump(2.5);
  CHECK(s.height() == before);
  CHECK(s.total_mass() == doctest::Approx(m + 2.5).epsilon(1e-15));
  s.advance_continuous(-2.5);
  CHECK(std::abs(s.height() - h) < 1e-12);
  CHECK(std::abs(s.total_mass() - m) < 1e-12);
}

TEST_CASE("partial atom erosion") {
  ExplorationStack s(1.0);
  s.advance_continuous(2.0);
  s.push_jump(5.0);
  s.advance_continuous(-3.0);
  REQUIRE(s.records().size() == 2);
  const auto& atom = std::get<ExplorationStack::Atom>(s.records().back());
  // (z + I_{t_i}(t) - xi_{t_i})^+ with xi_{t_i} = 7, I = 4
  CHECK(atom.mass == doctest::Approx(2.0));
  CHECK(atom.height == 2.0);
  CHECK(s.height() == 2.0);
  CHECK(s.total_mass() == doctest::Approx(4.0));
  CHECK(s.advance_continuous(-10.0) == doctest::Approx(6.0));
  CHECK(s.empty());
  CHECK(s.height() == 0.0);
}

TEST_CASE("truncate_mass") {
  ExplorationStack s(2.0);
  s.advance_continuous(1.0);
  s.push_jump(1.0);
  const auto same = truncate_mass(s, 0.0);
  CHECK(same.total_mass() == s.total_mass());
  CHECK(same.height() == s.height());
  const auto half = truncate_mass(s, 0.5);
  CHECK(half.total_mass() == doctest::Approx(1.5));
  CHECK(half.height() == s.height());
  // k_a mu([0,x]) = min(mu([0,x]), (<mu,1> - a)^+)
  for (double x : {0.0, 0.1, 0.25, 0.5, 1.0}) {
    CHECK(half.cumulative_mass(x) == doctest::Approx(std::min(s.cumulative_mass(x), s.total_mass() - 0.5)));
  }
  const auto gone = truncate_mass(s, 10.0);
  CHECK(gone.empty());
  CHECK(gone.total_mass() == 0.0);
}

TEST_CASE("concatenation") {
  ExplorationStack a(1.0), b(1.0);
  a.advance_continuous(1.0);
  a.push_jump(0.5);
  b.advance_continuous(0.5);
  b.push_jump(0.3);
  const auto c = concatenate(a, ExplorationStack(1.0));
  CHECK(c.total_mass() == a.total_mass());
  CHECK(c.height() == a.height());
  const auto d = concatenate(a, b);
  CHECK(d.total_mass() == doctest::Approx(a.total_mass() + b.total_mass()));
  CHECK(d.height() == doctest::Approx(1.5));
  CHECK(std::get<ExplorationStack::Atom>(d.records().back()).height == doctest::Approx(1.5));
}

TEST_CASE("jump-free height is (xi - I)/beta") {
  BranchingMechanism m{0.5, 1.0, {}};
  const auto p = sample_path(m, config(1e-3, 2.0), 1);
  const auto h = height_trajectory(p);
  double low = 0.0;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    low = std::min(low, p.values[k]);
    CHECK(std::abs(h[static_cast<Eigen::Index>(k)] - (p.values[k] - low) / p.effective_beta()) < 1e-9);
  }
}

TEST_CASE("stack equals the brute-force height formula, mass identity and atom erosion") {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto p = sample_path(mixed(), config(1e-3, 2.0), i);
    const double beta = p.effective_beta();
    const auto ref = oracle::beta_height_bruteforce(p);
    Explorer ex(beta, p.dt);
    std::size_t k = 0;
    double low = 0.0;
    do {
      const double h = ex.result().height.back();
      CHECK(std::abs(beta * h - ref[k]) < 1e-9);
      CHECK(std::abs(ex.stack().total_mass() - (p.values[k] - running_infimum(p, 0, k))) < 1e-10);
      CHECK(ex.result().infimum == running_infimum(p, 0, k));
      low = std::min(low, p.values[k]);
      ++k;
    } while (ex.step(p));
    CHECK(k == p.values.size());
    // live atoms carry (z + I_{t_i}(t) - xi_{t_i})^+ at the final time
    const std::size_t n = p.cells();
    std::vector<double> live;
    for (std::size_t j = 0; j < p.jumps.size(); ++j) {
      const auto& J = p.jumps[j];
      double inf_after = J.pre_value + J.size;
      inf_after = std::min(inf_after, running_infimum(p, J.cell + 1, n));
      for (std::size_t q = j + 1; q < p.jumps.size(); ++q) inf_after = std::min(inf_after, p.jumps[q].pre_value);
      const double rem = J.size + inf_after - (J.pre_value + J.size);
      if (rem > 1e-12) live.push_back(rem);
    }
    std::vector<double> atoms;
    for (const auto& r : ex.stack().records())
      if (const auto* a = std::get_if<ExplorationStack::Atom>(&r)) atoms.push_back(a->mass);
    REQUIRE(atoms.size() == live.size());
    for (std::size_t j = 0; j < atoms.size(); ++j) CHECK(std::abs(atoms[j] - live[j]) < 1e-10);
  }
}

TEST_CASE("fully eroded jump leaves the jump-free height") {
  LevyPath p;
  p.dt = 1.0;
  p.gaussian_coeff = 1.0;  // beta = 1/2
  p.brownian_increments = {1.0, -3.0, 0.5};
  p.jumps = {{0, 0.5, 1.0, 0.0}};
  p.rebuild();
  const auto h = height_trajectory(p);
  // after cell 1 the atom and everything below are gone: H = (xi - I)/beta
  CHECK(h[2] == 0.0);
  CHECK(h[3] == doctest::Approx(0.5 / 0.5));
}

TEST_CASE("snapshot decomposition") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto p = sample_path(mixed(), config(1e-3, 1.0), 100 + i);
    const double beta = p.effective_beta();
    const std::size_t T = 400;
    Explorer full(beta, p.dt);
    for (std::size_t k = 0; k < T; ++k) full.step(p);
    const ExplorationStack snapshot = full.stack();
    while (full.step(p)) {
    }
    const auto s = suffix(p, T);
    Explorer tail(beta, p.dt);
    while (tail.step(s)) {
    }
    const auto joined = concatenate(truncate_mass(snapshot, -tail.result().infimum), tail.stack());
    CHECK(std::abs(joined.total_mass() - full.stack().total_mass()) < 1e-10);
    CHECK(std::abs(joined.height() - full.stack().height()) < 1e-10);
    for (double x = 0.0; x < joined.height() + 0.5; x += 0.05)
      CHECK(std::abs(joined.cumulative_mass(x) - full.stack().cumulative_mass(x)) < 1e-10);
  }
}

TEST_CASE("stopping at the first passage") {
  BranchingMechanism m{0.5, 1.0, {}};
  auto cfg = config(1e-3, 50.0);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto p = sample_path_until_hit(m, cfg, 1.0, i);
    const auto hit = hitting_time(p, 1.0);
    REQUIRE(hit);
    const auto hp = explore(p, -1.0);
    CHECK(hp.stopped);
    CHECK(hp.end_time == doctest::Approx(hit->time).epsilon(1e-12));
    CHECK(hp.height.back() == 0.0);
    CHECK(hp.infimum == -1.0);
    CHECK(hp.cells() == p.cells());
  }
}

TEST_CASE("beta = 0 is unsupported") {
  BranchingMechanism m{1.0, 0.0, {}};
  m.jumps.atoms = {{1.0, 1.0}};
  const auto p = sample_path(m, config(1e-2, 1.0));
  CHECK_THROWS_AS(height_trajectory(p), UnsupportedConfiguration);
}
