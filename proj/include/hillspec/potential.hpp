#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "hillspec/errors.hpp"
#include "hillspec/expr.hpp"

namespace hillspec {

using cplx = std::complex<double>;

struct FourierTerm {
  int harmonic;      // n in exp(2*pi*i*n*x / period)
  cplx coefficient;  // c_n
};

struct FourierSeries {
  std::vector<FourierTerm> terms;
};

struct Segment {
  double length;
  cplx value;
};

struct PiecewiseConstant {
  std::vector<Segment> segments;  // lengths sum to the period
};

struct Impulse {
  double position;  // in [0, period), strictly increasing
  cplx strength;
};

struct DeltaComb {
  cplx background;
  std::vector<Impulse> impulses;
};

struct Expression {
  std::string source;
  expr::NodePtr ast;
};

/// A complex-valued periodic potential. Immutable after construction; all
/// queries are pure and safe for unrestricted concurrent use.
class PeriodicPotential {
 public:
  using Body = std::variant<FourierSeries, PiecewiseConstant, DeltaComb, Expression>;

  PeriodicPotential(double period, Body body);

  double period() const noexcept { return period_; }
  const Body& body() const noexcept { return body_; }

  static PeriodicPotential fourier(double period, std::vector<FourierTerm> terms);
  static PeriodicPotential piecewise(double period, std::vector<Segment> segments);
  static PeriodicPotential delta_comb(double period, cplx background,
                                      std::vector<Impulse> impulses);
  /// Parses `source` and smoke-evaluates it at x = 0 and x = period/2.
  static PeriodicPotential expression(double period, std::string source);

  /// True when the potential is propagated by exact transfer matrices
  /// (piecewise-constant and delta combs) rather than ODE stepping.
  bool exact_transfer_class() const noexcept;

 private:
  double period_;
  Body body_;
};

/// Half-plane / strip bounds on the potential range: re_min = inf Re V,
/// [im_min, im_max] = range of Im V. re_min may be -inf when sampling hits
/// non-finite values of an expression potential.
struct SpectralBound {
  double re_min;
  double im_min;
  double im_max;
  bool exact;
};

struct SymmetryReport {
  bool pt_symmetric;
  double max_defect;  // max over samples of |conj(V(-x)) - V(x)|
  int samples_used;
};

/// Reduces x into [0, period). fmod-based, hence exact and idempotent.
double reduce_period(double x, double period);

/// Pointwise evaluation of V at x (periodically extended). Delta combs are
/// evaluated away from impulses only; at an impulse position this throws
/// DomainError (impulses act through jump conditions, not point values).
cplx evaluate(const PeriodicPotential& v, double x);

/// Range bounds for V. Exact for piecewise-constant and constant potentials;
/// delta-comb bounds use the background only and are flagged inexact; other
/// representations are densely sampled and widened by `margin`.
SpectralBound bound_region(const PeriodicPotential& v, int samples = 4096,
                           double margin = 1e-6);

/// Checks conj(V(-x)) == V(x) on a dense sample grid (plus impulse-set
/// matching for delta combs).
SymmetryReport check_pt_symmetry(const PeriodicPotential& v, double tol,
                                 int samples = 2048);

}  // namespace hillspec
