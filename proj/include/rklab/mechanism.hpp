#pragma once

#include <limits>
#include <optional>
#include <vector>

namespace rklab {

struct JumpAtom {
  double size = 0.0;
  double weight = 0.0;
};

/// Density coefficient * z^(-1-index) on (z_min, z_max); z_max may be +inf.
struct PowerLaw {
  double coefficient = 0.0;
  double index = 1.5;
  double z_min = 0.0;
  double z_max = std::numeric_limits<double>::infinity();
};

/// Levy measure pi of the jumps: finitely many atoms plus an optional
/// truncated power law. Every moment the simulators need is closed form.
struct JumpMeasure {
  std::vector<JumpAtom> atoms;
  std::optional<PowerLaw> power_law;

  bool empty() const { return atoms.empty() && !power_law; }
  void validate() const;

  /// pi(delta, inf). Infinite when a power law reaches down to 0 and delta = 0.
  double tail_mass(double delta) const;
  /// Integral of z over (delta, inf).
  double tail_first_moment(double delta) const;
  /// Integral of z^2 over (0, delta].
  double small_second_moment(double delta) const;
  /// Integral of min(z, z^2); finite for every valid measure.
  double integrability() const;
  /// pi restricted to (delta, inf).
  JumpMeasure restricted_above(double delta) const;
  /// pi(A) for A = (lo, hi].
  double mass_between(double lo, double hi) const;

  /// Integral of (e^{-lambda z} - 1 + lambda z) pi(dz); atoms exact, the
  /// power law by adaptive Gauss-Kronrod in log z.
  double laplace_integral(double lambda) const;
};

struct BranchingMechanism {
  double alpha = 0.0;
  double beta = 0.0;
  JumpMeasure jumps;

  void validate() const;
};

/// e^{-y} - 1 + y without cancellation for small y.
double compensated_exponential(double y);

/// psi(lambda) = alpha lambda + beta lambda^2 + int (e^{-lambda z} - 1 + lambda z) pi(dz).
double psi(const BranchingMechanism& mech, double lambda);

/// Solution of dv/dt = -psi(v), v_0 = lambda (adaptive Dormand-Prince).
double v(const BranchingMechanism& mech, double t, double lambda);

/// Solver tolerance used by v; the flow property holds to a small multiple of it.
inline constexpr double kOdeTolerance = 1e-12;

/// Whether int_1^inf du / psi(u) converges.
///
/// beta > 0 gives psi(u) >= beta u^2. Without a Gaussian part only a power
/// law reaching down to z = 0 makes psi superlinear (psi ~ u^index); atoms
/// and power laws cut off above zero keep psi(u)/u bounded, so the integral
/// diverges.
bool grey_holds(const BranchingMechanism& mech);

/// Laplace functional e^{-x v_t(lambda)} of the CB-process started at x.
double cb_laplace(const BranchingMechanism& mech, double x, double t, double lambda);

/// First moment x e^{-alpha t}.
double cb_mean(const BranchingMechanism& mech, double x, double t);

/// Mechanism of the simulated process once jumps of size <= delta are
/// dropped (compensated). With `gaussian_correction` their variance
/// int_0^delta z^2 pi is moved into the Gaussian coefficient.
BranchingMechanism truncated_mechanism(const BranchingMechanism& mech, double delta,
                                       bool gaussian_correction);

}  // namespace rklab
