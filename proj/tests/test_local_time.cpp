#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rklab/errors.hpp"
#include "rklab/local_time.hpp"
#include "rklab/random.hpp"

using namespace rklab;

namespace {

BranchingMechanism feller() { return {0.5, 1.0, {}}; }

BranchingMechanism mixed() {
  BranchingMechanism m{0.3, 0.5, {}};
  m.jumps.atoms = {{1.0, 0.5}, {0.25, 2.0}};
  m.jumps.power_law = PowerLaw{0.4, 1.5, 0.0, 5.0};
  return m;
}

SimConfig config(double dt, double horizon, std::uint64_t seed = 31) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.seed = seed;
  c.truncation_delta = 0.05;
  return c;
}

HeightProcess constant_height(double c, std::size_t n, double dt) {
  HeightProcess hp;
  hp.dt = dt;
  hp.beta = 1.0;
  hp.height.assign(n + 1, c);
  hp.duration.assign(n, dt);
  hp.continuous.assign(n, 0.0);
  hp.end_time = static_cast<double>(n) * dt;
  return hp;
}

// E (h - A)^+ for A uniform on (a, a + w], by a midpoint sum.
double excess_by_sum(double h, double a, double w) {
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::max(h - (a + (i + 0.5) * w / n), 0.0);
  return s / n;
}

}  // namespace

TEST_CASE("level bins are one-sided") {
  const LevelGrid g(0.25, 1.0);
  CHECK(g.bins == 4);
  CHECK_FALSE(g.bin_of(0.0));
  CHECK_FALSE(g.bin_of(-0.1));
  CHECK(*g.bin_of(0.25) == 0);
  CHECK(*g.bin_of(0.25 + 1e-12) == 1);
  CHECK(*g.bin_of(1.0) == 3);
  CHECK_FALSE(g.bin_of(1.01));
  CHECK(g.bin_at(0.5) == 2);
  CHECK(default_bin_width(1e-3, 1.0) == doctest::Approx(std::max(0.1, 4.0 * std::sqrt(1e-3))));
  CHECK(aligned_bin_width(0.3, {0.25, 0.5, 1.0}) == doctest::Approx(0.25));
  CHECK(aligned_bin_width(0.1, {0.25, 0.5, 1.0}) == doctest::Approx(0.25 / 3));
}

TEST_CASE("window averages") {
  const LevelWindow point{0.5, 0.0};
  CHECK(point.above(0.5) == 0.0);
  CHECK(point.above(0.50001) == 1.0);
  CHECK(point.excess(0.75) == doctest::Approx(0.25));
  CHECK(point.excess(0.25) == 0.0);
  const LevelWindow win{0.5, 0.2};
  for (double h : {0.3, 0.5, 0.55, 0.62, 0.7, 0.9}) {
    CHECK(win.excess(h) == doctest::Approx(excess_by_sum(h, 0.5, 0.2)).epsilon(1e-8));
    CHECK(win.above(h) == doctest::Approx(std::clamp((h - 0.5) / 0.2, 0.0, 1.0)));
  }
}

TEST_CASE("constant height occupies one bin") {
  const double dt = 1e-3;
  const auto hp = constant_height(0.6, 1000, dt);
  const LevelGrid g(0.25, 1.0);
  const auto prof = occupation_profile(hp, g);
  CHECK(prof[2] == doctest::Approx(1.0 / 0.25));
  CHECK(prof[0] == 0.0);
  CHECK(prof[1] == 0.0);
  CHECK(prof[3] == 0.0);
  CHECK(occupation_below(hp, 1.0) == doctest::Approx(1.0));
  CHECK(occupation_below(hp, 0.5) == 0.0);
}

TEST_CASE("occupation field: monotone in t and the occupation identity") {
  const auto m = mixed();
  Philox4x32 rng(5, stream_id(StreamDomain::test, 1));
  for (std::uint64_t i = 0; i < 10; ++i) {
    const LevyPath p = sample_path(m, config(1e-3, 3.0), i);
    const HeightProcess hp = explore(p);
    double top = 0.0;
    for (double h : hp.height) top = std::max(top, h);
    const LevelGrid g(0.05, top + 0.05);
    const auto field = occupation_local_time(hp, g, std::numeric_limits<double>::infinity(), 7);
    for (Eigen::Index r = 1; r < field.values.rows(); ++r)
      for (Eigen::Index k = 0; k < field.values.cols(); ++k) CHECK(field.values(r, k) >= field.values(r - 1, k));

    // sum_bins L(bin) w f(bin) against int f(H_s) ds, f random per bin
    std::vector<double> f(g.bins);
    for (auto& x : f) x = rng.uniform_open();
    const auto prof = occupation_profile(hp, g);
    double lhs = 0.0, rhs = 0.0, zero = 0.0;
    for (std::size_t k = 0; k < g.bins; ++k) lhs += prof[static_cast<Eigen::Index>(k)] * g.width * f[k];
    for (std::size_t k = 0; k < hp.cells(); ++k) {
      if (auto b = g.bin_of(hp.height[k]))
        rhs += hp.duration[k] * f[*b];
      else
        zero += hp.duration[k];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(field.time_at_zero == doctest::Approx(zero).epsilon(1e-12));
    CHECK(occupation_below(hp, top) == doctest::Approx(hp.end_time).epsilon(1e-12));

    // window on a bin edge equals that bin of the field
    const double a = g.lower_edge(3);
    CHECK(window_occupation(hp, {a, g.width}) == doctest::Approx(prof[3]).epsilon(1e-12));
    CHECK(field.values.row(field.values.rows() - 1).transpose().isApprox(prof, 1e-12));
  }
}

TEST_CASE("tanaka: plus and minus agree, and vanish above the path") {
  const auto m = mixed();
  for (std::uint64_t i = 0; i < 20; ++i) {
    const LevyPath p = sample_path(m, config(1e-3, 2.0), i);
    const HeightProcess hp = explore(p);
    double top = 0.0;
    for (double h : hp.height) top = std::max(top, h);
    for (double h : hp.jump_height) top = std::max(top, h);
    for (double a : {0.0, 0.1, 0.3, 0.7}) {
      for (double w : {0.0, 0.05}) {
        const LevelWindow win{a, w};
        const double plus = tanaka_local_time(p, hp, win, TanakaVariant::plus);
        const double minus = tanaka_local_time(p, hp, win, TanakaVariant::minus);
        CHECK(std::abs(plus - minus) <= 1e-9);
      }
    }
    const LevelWindow high{top + 0.1, 0.0};
    CHECK(std::abs(tanaka_local_time(p, hp, high, TanakaVariant::plus)) <= 1e-9);
    CHECK(std::abs(tanaka_local_time(p, hp, high, TanakaVariant::minus)) <= 1e-9);
  }
}

TEST_CASE("jump erosion identity") {
  // jump-free: nothing to check
  const LevyPath p0 = sample_path(feller(), config(1e-3, 1.0), 3);
  CHECK(jump_erosion_identity_residual(p0, explore(p0), 0.1) == 0.0);

  // just after a jump both sides vanish
  BranchingMechanism m{0.5, 1.0, {}};
  m.jumps.atoms = {{1.0, 1.0}};
  for (std::uint64_t i = 0; i < 50; ++i) {
    const LevyPath p = sample_path(m, config(1e-3, 2.0), i);
    if (p.jumps.empty()) continue;
    Explorer ex(p.effective_beta(), p.dt);
    while (ex.result().cells() <= p.jumps.front().cell) ex.step(p);
    const auto state = erosion_state(p, ex.result());
    CHECK(state.remaining.front() >= 0.0);
    CHECK(jump_erosion_identity_residual(p, ex.result(), 0.05) >= 0.0);
    break;
  }
}

TEST_CASE("local time at level 0 tracks -I_0 under refinement") {
  const auto m = feller();
  const std::size_t M = 300;
  std::vector<double> err;
  for (double dt : {4e-4, 2e-4, 1e-4}) {
    const double w = std::cbrt(dt);
    double s = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const LevyPath p = sample_path(m, config(dt, 1.0, 77), i);
      const HeightProcess hp = explore(p);
      s += std::abs(window_occupation(hp, {0.0, w}) + hp.infimum);
    }
    err.push_back(s / M);
  }
  MESSAGE("mean |L(0) + I_0|: " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
}

TEST_CASE("tanaka agrees with the occupation estimate at the finest step") {
  const auto m = feller();
  const double dt = 1e-4, x = 1.0;
  const double w = 2.0 * default_bin_width(dt, 1.0);
  SimConfig c = config(dt, 100.0, 91);
  double dev = 0.0, occ = 0.0;
  for (std::size_t i = 0; i < 400; ++i) {
    const LevyPath p = sample_path_until_hit(m, c, x, i);
    const HeightProcess hp = explore(p, -x);
    REQUIRE(hp.stopped);
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const LevelWindow win{a, w};
      const double L = window_occupation(hp, win);
      dev += std::abs(tanaka_local_time(p, hp, win, TanakaVariant::plus) - L);
      occ += L;
    }
  }
  MESSAGE("relative mean |tanaka - occupation| at dt=1e-4: " << dev / occ);
  CHECK(dev / occ <= 0.05);
}

TEST_CASE("profile at the first passage") {
  const auto m = feller();
  const double x = 1.0, dt = 5e-4;
  const LevelGrid g(aligned_bin_width(default_bin_width(dt, 1.0), {0.25}), 2.0);
  double l0 = 0.0;
  const std::size_t M = 400;
  for (std::size_t i = 0; i < M; ++i) {
    const LevyPath p = sample_path_until_hit(m, config(dt, 100.0, 13), x, i);
    const auto prof = profile_at_hitting(p, x, g);
    l0 += prof[0];
    CHECK(prof[static_cast<Eigen::Index>(g.bins) - 1] >= 0.0);
  }
  // bin 0 averages L over (0, w], slightly below L(0) = x
  CHECK(l0 / M == doctest::Approx(x).epsilon(0.1));

  SimConfig short_run = config(dt, 0.01, 13);
  const LevyPath p = sample_path(m, short_run, 0);
  CHECK_THROWS_AS(profile_at_hitting(p, 5.0, g), PreconditionError);
}

TEST_CASE("csv headers") {
  const auto hp = constant_height(0.3, 10, 0.1);
  const LevelGrid g(0.25, 0.5);
  std::ostringstream a, b;
  write_local_time_csv(a, occupation_local_time(hp, g));
  write_profile_csv(b, g, occupation_profile(hp, g));
  CHECK(a.str().rfind("time,level,local_time\n", 0) == 0);
  CHECK(b.str().rfind("level,local_time\n", 0) == 0);
}
