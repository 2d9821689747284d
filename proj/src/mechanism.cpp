#include "rklab/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

namespace rklab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double power_mass(const PowerLaw& p, double lo, double hi) {
  lo = std::max(lo, p.z_min);
  hi = std::min(hi, p.z_max);
  if (!(hi > lo)) return 0.0;
  if (lo == 0.0) return kInf;
  const double upper = std::isinf(hi) ? 0.0 : std::pow(hi, -p.index);
  return p.coefficient / p.index * (std::pow(lo, -p.index) - upper);
}

// c * int_lo^hi z^{k-1-index} dz for the moments k = 1, 2.
double power_moment(const PowerLaw& p, double lo, double hi, int k) {
  lo = std::max(lo, p.z_min);
  hi = std::min(hi, p.z_max);
  if (!(hi > lo)) return 0.0;
  const double e = static_cast<double>(k) - p.index;  // exponent after integration
  if (e < 0.0) {
    if (lo == 0.0) return kInf;
    const double upper = std::isinf(hi) ? 0.0 : std::pow(hi, e);
    return p.coefficient / (-e) * (std::pow(lo, e) - upper);
  }
  if (std::isinf(hi)) return kInf;
  return p.coefficient / e * (std::pow(hi, e) - std::pow(lo, e));
}

// c int_lo^hi (e^{-lambda z} - 1 + lambda z) z^{-1-index} dz for lambda hi <= 1,
// expanding the exponential: terms fall off like 1/k!.
double power_series_part(const PowerLaw& p, double lambda, double lo, double hi) {
  double sum = 0.0, coef = 1.0;  // coef = (-lambda)^k / k!
  for (int k = 1; k < 60; ++k) {
    coef *= -lambda / k;
    if (k < 2) continue;
    const double e = k - p.index;
    const double term = coef * (std::pow(hi, e) - (lo > 0.0 ? std::pow(lo, e) : 0.0)) / e;
    sum += term;
    if (k > 4 && std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return p.coefficient * sum;
}

}  // namespace

void JumpMeasure::validate() const {
  for (const auto& a : atoms) {
    if (!(a.size > 0.0) || !(a.weight > 0.0) || !std::isfinite(a.size) || !std::isfinite(a.weight))
      throw std::invalid_argument("jump atoms need finite positive size and weight");
  }
  if (power_law) {
    const auto& p = *power_law;
    if (!(p.coefficient > 0.0)) throw std::invalid_argument("power_law.c must be positive");
    if (!(p.index > 1.0 && p.index < 2.0))
      throw std::invalid_argument("power_law.sigma must lie strictly inside (1,2)");
    if (!(p.z_min >= 0.0)) throw std::invalid_argument("power_law.z_min must be >= 0");
    if (!(p.z_max > p.z_min)) throw std::invalid_argument("power_law.z_max must exceed z_min");
  }
  if (!std::isfinite(integrability()))
    throw std::invalid_argument("jump measure does not integrate min(z, z^2)");
}

double JumpMeasure::tail_mass(double delta) const {
  double m = 0.0;
  for (const auto& a : atoms)
    if (a.size > delta) m += a.weight;
  if (power_law) m += power_mass(*power_law, delta, kInf);
  return m;
}

double JumpMeasure::mass_between(double lo, double hi) const {
  double m = 0.0;
  for (const auto& a : atoms)
    if (a.size > lo && a.size <= hi) m += a.weight;
  if (power_law) m += power_mass(*power_law, lo, hi);
  return m;
}

double JumpMeasure::tail_first_moment(double delta) const {
  double m = 0.0;
  for (const auto& a : atoms)
    if (a.size > delta) m += a.weight * a.size;
  if (power_law) m += power_moment(*power_law, delta, kInf, 1);
  return m;
}

double JumpMeasure::small_second_moment(double delta) const {
  double m = 0.0;
  for (const auto& a : atoms)
    if (a.size <= delta) m += a.weight * a.size * a.size;
  if (power_law) m += power_moment(*power_law, 0.0, delta, 2);
  return m;
}

double JumpMeasure::integrability() const {
  return small_second_moment(1.0) + tail_first_moment(1.0);
}

JumpMeasure JumpMeasure::restricted_above(double delta) const {
  JumpMeasure r;
  for (const auto& a : atoms)
    if (a.size > delta) r.atoms.push_back(a);
  if (power_law && power_law->z_max > delta) {
    PowerLaw p = *power_law;
    p.z_min = std::max(p.z_min, delta);
    r.power_law = p;
  }
  return r;
}

double compensated_exponential(double y) {
  if (std::abs(y) < 1e-3) {
    // Alternating series; the y^6 term is below 1e-18 relative.
    return y * y * (0.5 - y * (1.0 / 6.0 - y * (1.0 / 24.0 - y * (1.0 / 120.0 - y / 720.0))));
  }
  return std::expm1(-y) + y;
}

double JumpMeasure::laplace_integral(double lambda) const {
  double total = 0.0;
  for (const auto& a : atoms) total += a.weight * compensated_exponential(lambda * a.size);
  if (power_law && lambda > 0.0) {
    const auto& p = *power_law;
    const double cut = std::clamp(1.0 / lambda, p.z_min, p.z_max);
    if (cut > p.z_min) total += power_series_part(p, lambda, p.z_min, cut);
    if (p.z_max > cut) {
      // y = lambda z >= 1 here, no cancellation; integrate in s = log z.
      auto f = [&](double s) {
        const double z = std::exp(s);
        if (!std::isfinite(z)) return 0.0;
        return p.coefficient * compensated_exponential(lambda * z) * std::pow(z, -p.index);
      };
      const double hi = std::isinf(p.z_max) ? kInf : std::log(p.z_max);
      using boost::math::quadrature::gauss_kronrod;
      const double lc = std::log(cut);
      // a short interval is resolved by one rule; refining it only chases rounding
      total += gauss_kronrod<double, 31>::integrate(f, lc, hi, hi - lc < 1e-2 ? 0 : 15, 1e-13);
    }
  }
  return total;
}

void BranchingMechanism::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
  jumps.validate();
}

double psi(const BranchingMechanism& mech, double lambda) {
  if (!(lambda >= 0.0)) throw std::domain_error("psi: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  return mech.alpha * lambda + mech.beta * lambda * lambda + mech.jumps.laplace_integral(lambda);
}

double v(const BranchingMechanism& mech, double t, double lambda) {
  if (!(t >= 0.0)) throw std::domain_error("v: t must be >= 0");
  if (!(lambda >= 0.0)) throw std::domain_error("v: lambda must be >= 0");
  if (t == 0.0 || lambda == 0.0) return lambda;
  namespace ode = boost::numeric::odeint;
  using Stepper = ode::runge_kutta_fehlberg78<double, double, double, double, ode::vector_space_algebra>;
  double state = lambda;
  auto rhs = [&](const double& y, double& dydt, double) { dydt = -psi(mech, std::max(y, 0.0)); };
  ode::integrate_adaptive(ode::make_controlled<Stepper>(kOdeTolerance, kOdeTolerance), rhs, state,
                          0.0, t, std::min(t, 1e-3));
  return std::clamp(state, 0.0, lambda);
}

bool grey_holds(const BranchingMechanism& mech) {
  if (mech.beta > 0.0) return true;
  return mech.jumps.power_law.has_value() && mech.jumps.power_law->z_min == 0.0;
}

double cb_laplace(const BranchingMechanism& mech, double x, double t, double lambda) {
  if (!(x >= 0.0)) throw std::domain_error("cb_laplace: x must be >= 0");
  if (x == 0.0) return 1.0;
  return std::exp(-x * v(mech, t, lambda));
}

double cb_mean(const BranchingMechanism& mech, double x, double t) {
  if (!(x >= 0.0) || !(t >= 0.0)) throw std::domain_error("cb_mean: arguments must be >= 0");
  return x * std::exp(-mech.alpha * t);
}

BranchingMechanism truncated_mechanism(const BranchingMechanism& mech, double delta,
                                       bool gaussian_correction) {
  BranchingMechanism out = mech;
  out.jumps = mech.jumps.restricted_above(delta);
  if (gaussian_correction) out.beta += 0.5 * mech.jumps.small_second_moment(delta);
  return out;
}

}  // namespace rklab
