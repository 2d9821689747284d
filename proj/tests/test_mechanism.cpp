#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "rklab/mechanism.hpp"

using namespace rklab;

namespace {

BranchingMechanism feller(double alpha, double beta) { return {alpha, beta, {}}; }

BranchingMechanism mixed() {
  BranchingMechanism m{0.3, 0.5, {}};
  m.jumps.atoms = {{1.0, 0.5}, {0.25, 2.0}};
  m.jumps.power_law = PowerLaw{0.4, 1.5, 0.0, 5.0};
  return m;
}

BranchingMechanism stable_tail() {
  BranchingMechanism m{0.1, 0.0, {}};
  m.jumps.power_law = PowerLaw{1.0, 1.3, 0.01, std::numeric_limits<double>::infinity()};
  return m;
}

}  // namespace

TEST_CASE("psi closed forms") {
  CHECK(psi(feller(0, 1), 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(psi(feller(1, 0), 3.0) == doctest::Approx(3.0).epsilon(1e-15));
  BranchingMechanism atom{0, 0, {}};
  atom.jumps.atoms = {{1.0, 1.0}};
  CHECK(psi(atom, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(psi(mixed(), 0.0) == 0.0);
  CHECK_THROWS_AS(psi(mixed(), -1.0), std::domain_error);
}

TEST_CASE("psi quadrature matches a Riemann sum") {
  for (const auto& m : {mixed(), stable_tail()}) {
    for (double lam : {0.01, 0.3, 1.0, 4.0, 25.0}) {
      const double ref = oracle::psi_riemann(m, lam);
      CHECK(std::abs(psi(m, lam) - ref) <= 1e-6 * std::abs(ref));
    }
  }
}

TEST_CASE("psi is nondecreasing and convex on a grid") {
  for (const auto& m : {mixed(), stable_tail(), feller(0.5, 1.0)}) {
    double prev = 0.0, prev_slope = 0.0;
    for (int i = 1; i <= 60; ++i) {
      const double lam = 0.1 * i;
      const double p = psi(m, lam);
      const double slope = (p - prev) / 0.1;
      CHECK(p >= prev);
      if (i > 1) CHECK(slope >= prev_slope - 1e-9);
      prev = p;
      prev_slope = slope;
    }
  }
}

TEST_CASE("v closed forms and flow property") {
  CHECK(v(mixed(), 0.0, 7.0) == 7.0);
  CHECK(v(feller(0, 1), 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(v(feller(1, 0), std::log(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-10));
  for (double t : {0.1, 0.7, 2.0, 5.0}) {
    for (double lam : {0.2, 1.0, 3.0, 20.0}) {
      const double exact = oracle::v_feller(0.5, 1.0, t, lam);
      CHECK(std::abs(v(feller(0.5, 1.0), t, lam) - exact) <= 1e-9 * exact);
    }
  }
  const auto m = mixed();
  for (double t : {0.2, 1.0}) {
    for (double s : {0.3, 1.5}) {
      for (double lam : {0.5, 2.0, 10.0}) {
        const double vs = v(m, s, lam);
        CHECK(std::abs(v(m, t + s, lam) - v(m, t, vs)) <= 1e-10);
        CHECK(vs <= lam);
        CHECK(vs >= 0.0);
      }
    }
  }
}

TEST_CASE("grey condition") {
  CHECK(grey_holds(feller(0, 1)));
  CHECK(!grey_holds(feller(1, 0)));
  BranchingMechanism stable{0, 0, {}};
  stable.jumps.power_law = PowerLaw{1.0, 1.5, 0.0, std::numeric_limits<double>::infinity()};
  CHECK(grey_holds(stable));
  CHECK(!grey_holds(stable_tail()));
  BranchingMechanism atoms{0.2, 0, {}};
  atoms.jumps.atoms = {{1.0, 1.0}};
  CHECK(!grey_holds(atoms));
}

TEST_CASE("grey verdicts agree with a tail quadrature") {
  // int_1^U du/psi(u) grows without bound in the divergent cases.
  auto tail = [](const BranchingMechanism& m, double upper) {
    double s = 0.0;
    const int n = 4000;
    const double h = std::log(upper) / n;
    for (int i = 0; i < n; ++i) {
      const double u = std::exp((i + 0.5) * h);
      s += u / psi(m, u) * h;
    }
    return s;
  };
  BranchingMechanism stable{0, 0, {}};
  stable.jumps.power_law = PowerLaw{1.0, 1.5, 0.0, std::numeric_limits<double>::infinity()};
  CHECK(tail(stable, 1e8) - tail(stable, 1e6) < 0.05 * tail(stable, 1e6));
  CHECK(tail(feller(0, 1), 1e8) - tail(feller(0, 1), 1e6) < 1e-5);
  CHECK(tail(feller(1, 0), 1e8) - tail(feller(1, 0), 1e6) > 4.0);
}

TEST_CASE("cb laplace and mean") {
  CHECK(cb_laplace(mixed(), 0.0, 1.0, 2.0) == 1.0);
  CHECK(cb_laplace(mixed(), 1.0, 1.0, 0.0) == 1.0);
  CHECK(cb_laplace(feller(0, 1), 1.0, 1.0, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
  CHECK(cb_mean(feller(0.5, 1), 1.0, 2.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(cb_mean(feller(0.5, 1), 3.0, 0.0) == 3.0);
  CHECK(cb_mean(feller(0.5, 1), 0.0, 2.0) == 0.0);
  const auto m = mixed();
  const double a = cb_laplace(m, 0.7, 0.8, 1.3) * cb_laplace(m, 0.4, 0.8, 1.3);
  CHECK(cb_laplace(m, 1.1, 0.8, 1.3) == doctest::Approx(a).epsilon(1e-14));
}

TEST_CASE("truncated mechanism") {
  const auto m = mixed();
  const double delta = 0.1;
  const auto drop = truncated_mechanism(m, delta, false);
  const auto corr = truncated_mechanism(m, delta, true);
  CHECK(drop.beta == m.beta);
  CHECK(corr.beta == doctest::Approx(m.beta + 0.5 * m.jumps.small_second_moment(delta)));
  CHECK(drop.jumps.tail_mass(0.0) == doctest::Approx(m.jumps.tail_mass(delta)));
  CHECK(drop.jumps.tail_first_moment(0.0) == doctest::Approx(m.jumps.tail_first_moment(delta)));
  // c int_0^delta z^{1-sigma} dz = c delta^{2-sigma}/(2-sigma)
  CHECK(m.jumps.small_second_moment(delta) == doctest::Approx(0.4 * std::pow(delta, 0.5) / 0.5));
}

TEST_CASE("jump measure validation") {
  JumpMeasure bad;
  bad.atoms = {{-1.0, 1.0}};
  CHECK_THROWS(bad.validate());
  JumpMeasure bad_index;
  bad_index.power_law = PowerLaw{1.0, 2.0, 0.0, 1.0};
  CHECK_THROWS(bad_index.validate());
  CHECK_NOTHROW(mixed().jumps.validate());
}
