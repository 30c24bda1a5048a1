#include "hillspec/floquet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace hillspec {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Fast in-period evaluation for the smooth potential classes.

class SmoothEval {
 public:
  explicit SmoothEval(const PeriodicPotential& v) {
    if (const auto* f = std::get_if<FourierSeries>(&v.body())) {
      const double base = kTwoPi / v.period();
      for (const auto& t : f->terms)
        terms_.push_back({base * t.harmonic, t.coefficient});
    } else if (const auto* ex = std::get_if<Expression>(&v.body())) {
      ast_ = ex->ast;
    } else {
      throw DomainError("SmoothEval expects a Fourier or expression potential");
    }
  }

  cplx operator()(double x) const {
    if (ast_) return expr::eval(ast_, x);
    cplx sum(0.0, 0.0);
    for (const auto& [freq, coeff] : terms_)
      sum += coeff * std::polar(1.0, freq * x);
    return sum;
  }

 private:
  std::vector<std::pair<double, cplx>> terms_;
  expr::NodePtr ast_;
};

// ---------------------------------------------------------------------------
// 2x2 complex matrices.

struct Mat2 {
  cplx m00, m01, m10, m11;
};

constexpr Mat2 kIdentity{1.0, 0.0, 0.0, 1.0};
constexpr Mat2 kZero{0.0, 0.0, 0.0, 0.0};

Mat2 mul(const Mat2& A, const Mat2& B) {
  return {A.m00 * B.m00 + A.m01 * B.m10, A.m00 * B.m01 + A.m01 * B.m11,
          A.m10 * B.m00 + A.m11 * B.m10, A.m10 * B.m01 + A.m11 * B.m11};
}

Mat2 add(const Mat2& A, const Mat2& B) {
  return {A.m00 + B.m00, A.m01 + B.m01, A.m10 + B.m10, A.m11 + B.m11};
}

Mat2 scale(double s, const Mat2& A) {
  return {s * A.m00, s * A.m01, s * A.m10, s * A.m11};
}

double inf_norm(const Mat2& A) {
  return std::max(std::max(std::abs(A.m00), std::abs(A.m01)),
                  std::max(std::abs(A.m10), std::abs(A.m11)));
}

// The first-order form of psi'' = (V - E) psi is y' = A(x) y with
// A = [[0, 1], [u, 0]], u = V(x) - E. apply_A computes A * M.
Mat2 apply_A(cplx u, const Mat2& M) {
  return {M.m10, M.m11, u * M.m00, u * M.m01};
}

// Forcing block of the E-derivative system Psi' = A Psi + B Phi,
// B = [[0, 0], [-1, 0]].
Mat2 apply_B(const Mat2& M) { return {0.0, 0.0, -M.m00, -M.m01}; }

cplx kahan_det(const Mat2& M) {
  return det2x2_compensated(M.m00, M.m01, M.m10, M.m11);
}

// ---------------------------------------------------------------------------
// Matrix-form Dormand-Prince 5(4).
//
// The system is linear, so each step is a 2x2 map S (plus a forcing map T for
// the E-derivative block) built from stages started at the identity; the
// running fundamental matrix is advanced by one matrix multiply. Keeping the
// per-step maps explicit lets the Wronskian drift be accumulated as the
// product of their determinants, which stays meaningful even when the
// fundamental matrix itself grows to a size where the entrywise determinant
// of any representable matrix is dominated by rounding (~eps * |M|^2).

struct Propagation {
  Mat2 phi;               // fundamental matrix at x = period
  Mat2 psi;               // dPhi/dE
  double est_error;       // propagated local-error estimate
  double wronskian_drift; // |prod det(step maps) - 1|
};

Propagation integrate_matrix_dopri5(const SmoothEval& pot, cplx E,
                                    double length, double tol) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  Mat2 Phi = kIdentity;
  Mat2 Psi = kZero;
  cplx det_prod(1.0, 0.0);
  double rel_error_sum = 0.0;
  long steps = 0;

  const double h_min = 1e-14 * length;
  double x = 0.0;
  double h = length * std::min(0.1, std::pow(tol, 0.2));
  cplx u1 = pot(0.0) - E;  // FSAL: reused across steps

  while (x < length) {
    if (h < h_min)
      throw StepSizeUnderflow("integrator step fell below 1e-14 * period");
    bool last = false;
    if (x + h >= length) {
      h = length - x;
      last = true;
    }

    const cplx u2 = pot(x + c2 * h) - E;
    const cplx u3 = pot(x + c3 * h) - E;
    const cplx u4 = pot(x + c4 * h) - E;
    const cplx u5 = pot(x + c5 * h) - E;
    const cplx u6 = pot(x + h) - E;  // stages 6 and 7 share this node

    // Stage pairs (P, Q) for (Phi, Psi), started from (I, 0).
    Mat2 k1p = apply_A(u1, kIdentity);
    Mat2 k1q = apply_B(kIdentity);

    Mat2 P = add(kIdentity, scale(h * a21, k1p));
    Mat2 Q = scale(h * a21, k1q);
    Mat2 k2p = apply_A(u2, P);
    Mat2 k2q = add(apply_A(u2, Q), apply_B(P));

    P = add(kIdentity, add(scale(h * a31, k1p), scale(h * a32, k2p)));
    Q = add(scale(h * a31, k1q), scale(h * a32, k2q));
    Mat2 k3p = apply_A(u3, P);
    Mat2 k3q = add(apply_A(u3, Q), apply_B(P));

    P = add(kIdentity, add(add(scale(h * a41, k1p), scale(h * a42, k2p)),
                           scale(h * a43, k3p)));
    Q = add(add(scale(h * a41, k1q), scale(h * a42, k2q)),
            scale(h * a43, k3q));
    Mat2 k4p = apply_A(u4, P);
    Mat2 k4q = add(apply_A(u4, Q), apply_B(P));

    P = add(kIdentity,
            add(add(scale(h * a51, k1p), scale(h * a52, k2p)),
                add(scale(h * a53, k3p), scale(h * a54, k4p))));
    Q = add(add(scale(h * a51, k1q), scale(h * a52, k2q)),
            add(scale(h * a53, k3q), scale(h * a54, k4q)));
    Mat2 k5p = apply_A(u5, P);
    Mat2 k5q = add(apply_A(u5, Q), apply_B(P));

    P = add(kIdentity,
            add(add(add(scale(h * a61, k1p), scale(h * a62, k2p)),
                    add(scale(h * a63, k3p), scale(h * a64, k4p))),
                scale(h * a65, k5p)));
    Q = add(add(add(scale(h * a61, k1q), scale(h * a62, k2q)),
                add(scale(h * a63, k3q), scale(h * a64, k4q))),
            scale(h * a65, k5q));
    Mat2 k6p = apply_A(u6, P);
    Mat2 k6q = add(apply_A(u6, Q), apply_B(P));

    // 5th-order step maps.
    Mat2 S = add(kIdentity,
                 add(add(add(scale(h * b1, k1p), scale(h * b3, k3p)),
                         add(scale(h * b4, k4p), scale(h * b5, k5p))),
                     scale(h * b6, k6p)));
    Mat2 T = add(add(add(scale(h * b1, k1q), scale(h * b3, k3q)),
                     add(scale(h * b4, k4q), scale(h * b5, k5q))),
                 scale(h * b6, k6q));

    // Project the step map onto the unit-determinant manifold. The exact
    // propagator of a traceless system conserves the Wronskian; the per-step
    // determinant drift is a component of the truncation error, so dividing
    // it out keeps the order while making the conservation law hold at every
    // tolerance.
    {
      cplx corr = 1.0 / std::sqrt(kahan_det(S));
      S = {corr * S.m00, corr * S.m01, corr * S.m10, corr * S.m11};
      T = {corr * T.m00, corr * T.m01, corr * T.m10, corr * T.m11};
    }

    Mat2 k7p = apply_A(u6, S);
    Mat2 k7q = add(apply_A(u6, T), apply_B(S));

    Mat2 errS = add(add(add(scale(h * e1, k1p), scale(h * e3, k3p)),
                        add(scale(h * e4, k4p), scale(h * e5, k5p))),
                    add(scale(h * e6, k6p), scale(h * e7, k7p)));
    Mat2 errT = add(add(add(scale(h * e1, k1q), scale(h * e3, k3q)),
                        add(scale(h * e4, k4q), scale(h * e5, k5q))),
                    add(scale(h * e6, k6q), scale(h * e7, k7q)));

    Mat2 newPhi = mul(S, Phi);
    Mat2 newPsi = add(mul(S, Psi), mul(T, Phi));
    Mat2 errPhi = mul(errS, Phi);
    Mat2 errPsi = add(mul(errS, Psi), mul(errT, Phi));

    const cplx* olds[8] = {&Phi.m00, &Phi.m01, &Phi.m10, &Phi.m11,
                           &Psi.m00, &Psi.m01, &Psi.m10, &Psi.m11};
    const cplx* news[8] = {&newPhi.m00, &newPhi.m01, &newPhi.m10, &newPhi.m11,
                           &newPsi.m00, &newPsi.m01, &newPsi.m10, &newPsi.m11};
    const cplx* errs[8] = {&errPhi.m00, &errPhi.m01, &errPhi.m10, &errPhi.m11,
                           &errPsi.m00, &errPsi.m01, &errPsi.m10, &errPsi.m11};
    double err_sq = 0.0, err_abs = 0.0, y_norm = 0.0;
    for (int i = 0; i < 8; ++i) {
      double mag = std::abs(*errs[i]);
      double sc = tol * (1.0 + std::max(std::abs(*olds[i]), std::abs(*news[i])));
      err_sq += (mag / sc) * (mag / sc);
      err_abs = std::max(err_abs, mag);
      y_norm = std::max(y_norm, std::abs(*news[i]));
    }
    double err = std::sqrt(err_sq / 8.0);

    if (!std::isfinite(err)) {
      h *= 0.25;
      continue;
    }
    if (err <= 1.0) {
      x = last ? length : x + h;
      Phi = newPhi;
      Psi = newPsi;
      u1 = u6;
      det_prod *= kahan_det(S);
      rel_error_sum += err_abs / std::max(1.0, y_norm);
      ++steps;
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
    if (steps > 50'000'000)
      throw StepSizeUnderflow("integrator exceeded its step budget");
  }

  Propagation out;
  out.phi = Phi;
  out.psi = Psi;
  out.wronskian_drift = std::abs(det_prod - cplx(1.0, 0.0));
  double final_norm = std::max(inf_norm(Phi), 1.0);
  out.est_error =
      rel_error_sum * (1.0 + inf_norm(Phi)) + 32.0 * kEps * (1.0 + final_norm);
  return out;
}

// ---------------------------------------------------------------------------
// Exact transfer matrices for constant-potential segments.
//
// With u = E - v, the propagator of psi'' = -u psi over a segment of length L
// is T = [[c, s], [-u s, c]], c = cos(sqrt(u) L), s = sin(sqrt(u) L)/sqrt(u);
// both entire in u, so the small-|u| region uses their power series.

struct SegmentFactors {
  Mat2 T;
  Mat2 TE;  // dT/dE
};

SegmentFactors constant_segment_transfer(cplx u, double L) {
  const double L2 = L * L;
  cplx c, s, sE;
  if (std::abs(u) * L2 < 1e-12) {
    c = 1.0 - u * (L2 / 2.0) + u * u * (L2 * L2 / 24.0);
    s = L * (1.0 - u * (L2 / 6.0) + u * u * (L2 * L2 / 120.0));
    sE = -L * L2 / 6.0 + u * (L * L2 * L2 / 60.0);
  } else {
    cplx k = std::sqrt(u);
    c = std::cos(k * L);
    s = std::sin(k * L) / k;
    sE = (L * c - s) / (2.0 * u);
  }
  cplx cE = -0.5 * L * s;
  cplx gE = -s - u * sE;
  return {{c, s, -u * s, c}, {cE, sE, gE, cE}};
}

Propagation propagate_exact(const PeriodicPotential& v, cplx E) {
  Mat2 phi = kIdentity;
  Mat2 psi = kZero;
  cplx det_prod(1.0, 0.0);
  int factors = 0;

  auto apply_segment = [&](cplx value, double length) {
    if (length <= 0.0) return;
    SegmentFactors f = constant_segment_transfer(E - value, length);
    psi = add(mul(f.TE, phi), mul(f.T, psi));
    phi = mul(f.T, phi);
    det_prod *= kahan_det(f.T);
    ++factors;
  };

  if (const auto* pw = std::get_if<PiecewiseConstant>(&v.body())) {
    for (const auto& seg : pw->segments) apply_segment(seg.value, seg.length);
  } else if (const auto* dc = std::get_if<DeltaComb>(&v.body())) {
    double x = 0.0;
    for (const auto& imp : dc->impulses) {
      apply_segment(dc->background, imp.position - x);
      Mat2 J{1.0, 0.0, imp.strength, 1.0};  // psi' jump; unit determinant
      psi = mul(J, psi);
      phi = mul(J, phi);
      ++factors;
      x = imp.position;
    }
    apply_segment(dc->background, v.period() - x);
  } else {
    throw DomainError("exact propagation expects piecewise or delta-comb");
  }

  Propagation out;
  out.phi = phi;
  out.psi = psi;
  out.wronskian_drift = std::abs(det_prod - cplx(1.0, 0.0));
  out.est_error = 16.0 * kEps * (factors + 1) * (1.0 + inf_norm(phi));
  return out;
}

void check_tol(double tol) {
  if (!(tol >= kMinOdeTol) || !(tol <= kMaxOdeTol))
    throw InvalidTolerance("integrator tolerance must lie in [1e-13, 1e-3]");
}

Propagation propagate(const PeriodicPotential& v, cplx E, double tol) {
  check_tol(tol);
  if (v.exact_transfer_class()) return propagate_exact(v, E);
  SmoothEval pot(v);
  return integrate_matrix_dopri5(pot, E, v.period(), tol);
}

// Compensated real dot product of length 4 (TwoProduct + TwoSum error terms).
double dot4_compensated(const std::array<double, 4>& a,
                        const std::array<double, 4>& b) {
  double sum = 0.0, comp = 0.0;
  for (int i = 0; i < 4; ++i) {
    double p = a[i] * b[i];
    double perr = std::fma(a[i], b[i], -p);
    double t = sum + p;
    double serr = std::abs(sum) >= std::abs(p) ? (sum - t) + p : (p - t) + sum;
    sum = t;
    comp += perr + serr;
  }
  return sum + comp;
}

}  // namespace

cplx det2x2_compensated(cplx a, cplx b, cplx c, cplx d) {
  // ad - bc, expanded into two length-4 real dot products.
  double re = dot4_compensated({a.real(), -a.imag(), -b.real(), b.imag()},
                               {d.real(), d.imag(), c.real(), c.imag()});
  double im = dot4_compensated({a.real(), a.imag(), -b.real(), -b.imag()},
                               {d.imag(), d.real(), c.imag(), c.real()});
  return {re, im};
}

MonodromyMatrix monodromy(const PeriodicPotential& v, cplx E, double tol) {
  Propagation p = propagate(v, E, tol);
  return MonodromyMatrix{p.phi.m00, p.phi.m01, p.phi.m10, p.phi.m11, E,
                         p.wronskian_drift};
}

DiscriminantValue discriminant(const PeriodicPotential& v, cplx E, double tol) {
  Propagation p = propagate(v, E, tol);
  return DiscriminantValue{0.5 * (p.phi.m00 + p.phi.m11),
                           0.5 * (p.psi.m00 + p.psi.m11), E, p.est_error};
}

FloquetMultipliers multipliers_of(cplx delta) {
  // rho = delta +- sqrt(delta^2 - 1); the factored radicand keeps accuracy
  // near delta = +-1.
  cplx s = std::sqrt((delta - 1.0) * (delta + 1.0));
  cplx r1 = delta + s;
  cplx r2 = delta - s;
  double m1 = std::abs(r1), m2 = std::abs(r2);
  cplx rho1;
  if (std::abs(m1 - m2) <= 4.0 * kEps * (m1 + m2)) {
    rho1 = r1.imag() >= r2.imag() ? r1 : r2;
  } else {
    rho1 = m1 > m2 ? r1 : r2;
  }
  return FloquetMultipliers{rho1, cplx(1.0, 0.0) / rho1};
}

FloquetMultipliers multipliers(const DiscriminantValue& dv) {
  return multipliers_of(dv.delta);
}

DerivativeSet derivatives_at(const PeriodicPotential& v, cplx E0, int max_order,
                             double radius, double tol) {
  if (max_order < 1 || max_order > 12)
    throw DomainError("derivative order must lie in [1, 12]");
  if (!(radius > 0.0)) throw DomainError("contour radius must be positive");
  check_tol(tol);

  const DiscriminantValue direct = discriminant(v, E0, tol);
  const int m = std::max(64, 8 * max_order);

  double r = radius;
  for (int attempt = 0; attempt < 4; ++attempt, r *= 0.5) {
    std::vector<cplx> ring(m);
    double max_abs = 0.0;
    for (int l = 0; l < m; ++l) {
      double theta = kTwoPi * l / m;
      cplx z = E0 + std::polar(r, theta);
      ring[l] = discriminant(v, z, tol).delta;
      max_abs = std::max(max_abs, std::abs(ring[l]));
    }

    DerivativeSet out;
    out.values.resize(max_order + 1);
    out.max_abs_on_circle = max_abs;
    out.radius_used = r;
    out.nodes = m;

    double rpow = 1.0;
    double factorial = 1.0;
    for (int j = 0; j <= max_order; ++j) {
      cplx acc(0.0, 0.0);
      for (int l = 0; l < m; ++l) {
        double theta = kTwoPi * l / m;
        acc += ring[l] * std::polar(1.0, -theta * j);
      }
      out.values[j] = factorial * acc / (static_cast<double>(m) * rpow);
      rpow *= r;
      factorial *= (j + 1);
    }

    out.cauchy_delta_prime = out.values[1];
    double mismatch = std::abs(out.cauchy_delta_prime - direct.delta_prime);
    if (mismatch <= 1e3 * tol * (1.0 + std::abs(direct.delta_prime))) {
      out.values[0] = direct.delta;
      out.values[1] = direct.delta_prime;
      return out;
    }
  }
  throw InconsistentDerivative(
      "contour and variational Delta' disagree after radius reduction");
}

}  // namespace hillspec
