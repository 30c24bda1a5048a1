#pragma once

#include <complex>
#include <vector>

#include "hillspec/potential.hpp"

namespace hillspec {

inline constexpr double kMinOdeTol = 1e-13;
inline constexpr double kMaxOdeTol = 1e-3;

/// Fundamental-solution data at x = period for -psi'' + V psi = E psi:
/// a, b are the values of the two canonical solutions (initial data (1,0)
/// and (0,1)) and c, d their x-derivatives.
struct MonodromyMatrix {
  cplx a, b, c, d;
  cplx energy;
  /// Wronskian drift |det - 1| accumulated at construction as the product of
  /// per-factor determinants of the propagation. For matrices of moderate
  /// norm it coincides with |ad - bc - 1| of the stored entries; once the
  /// entries grow past ~1e4 the entrywise determinant of *any* representable
  /// matrix is dominated by rounding (~eps * |M|^2) and only the accumulated
  /// form remains meaningful.
  double det_defect;
};

struct DiscriminantValue {
  cplx delta;        // (a + d) / 2
  cplx delta_prime;  // d(delta)/dE from the co-integrated variational system
  cplx energy;
  double est_error;  // propagated integrator error estimate
};

struct FloquetMultipliers {
  cplx rho1;  // |rho1| >= 1; ties on the unit circle resolved to Im >= 0
  cplx rho2;  // 1 / rho1
};

/// ad - bc evaluated with compensated (FMA-based) products, so the unit
/// Wronskian survives even when the entries are exponentially large.
cplx det2x2_compensated(cplx a, cplx b, cplx c, cplx d);

/// Integrates the fundamental system across one period. Smooth potentials use
/// an adaptive embedded Runge-Kutta 4(5) pair at absolute/relative tolerance
/// tol; piecewise-constant segments and delta-comb gaps are propagated by
/// exact 2x2 transfer matrices, with impulses applied as psi' jumps.
MonodromyMatrix monodromy(const PeriodicPotential& v, cplx E, double tol);

/// Monodromy plus dDelta/dE: the E-derivative of each fundamental column is
/// co-integrated (y'' = (V - E) y - psi, zero initial data) in one pass.
DiscriminantValue discriminant(const PeriodicPotential& v, cplx E, double tol);

/// Roots of rho^2 - 2 delta rho + 1 = 0. rho2 is computed as 1/rho1 by
/// division rather than from the quadratic formula's second root.
FloquetMultipliers multipliers(const DiscriminantValue& dv);
FloquetMultipliers multipliers_of(cplx delta);

struct DerivativeSet {
  std::vector<cplx> values;  // Delta, Delta', ..., Delta^(max_order) at E0
  cplx cauchy_delta_prime;   // raw contour value of Delta', before replacement
  double max_abs_on_circle;  // max |Delta| over the contour nodes
  double radius_used;
  int nodes;
};

/// Derivatives of Delta at E0 via trapezoid Cauchy integrals on the circle
/// |z - E0| = radius (spectrally accurate; Delta is entire). Entries 0 and 1
/// are cross-checked against the direct discriminant values and replaced by
/// them; an irreconcilable Delta' mismatch (radius halved and retried up to
/// 3 times first) throws InconsistentDerivative.
DerivativeSet derivatives_at(const PeriodicPotential& v, cplx E0, int max_order,
                             double radius, double tol);

inline double default_cauchy_radius(cplx E0) { return 0.1 * (1.0 + std::abs(E0)); }

}  // namespace hillspec
