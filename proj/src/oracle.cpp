#include "hillspec/oracle.hpp"

#include <cmath>

namespace hillspec {

namespace {

struct Entries {
  cplx c;  // cos(k L)
  cplx s;  // sin(k L) / k
};

Entries segment_entries(cplx u, double L) {
  // u = E - v; both entries are entire in u.
  const double L2 = L * L;
  if (std::abs(u) * L2 < 1e-12) {
    return {1.0 - u * (L2 / 2.0) + u * u * (L2 * L2 / 24.0),
            L * (1.0 - u * (L2 / 6.0) + u * u * (L2 * L2 / 120.0))};
  }
  cplx k = std::sqrt(u);
  return {std::cos(k * L), std::sin(k * L) / k};
}

struct M2 {
  cplx a, b, c, d;
};

M2 segment_matrix(cplx u, double L) {
  Entries e = segment_entries(u, L);
  return {e.c, e.s, -u * e.s, e.c};
}

M2 mul(const M2& A, const M2& B) {
  return {A.a * B.a + A.b * B.c, A.a * B.b + A.b * B.d,
          A.c * B.a + A.d * B.c, A.c * B.b + A.d * B.d};
}

M2 compute(const OracleKind& kind, double omega, cplx E) {
  struct V {
    double omega;
    cplx E;
    M2 operator()(const OracleFree&) const { return segment_matrix(E, omega); }
    M2 operator()(const OracleConstant& c) const {
      return segment_matrix(E - c.value, omega);
    }
    M2 operator()(const OraclePiecewise& pw) const {
      M2 m{1.0, 0.0, 0.0, 1.0};
      for (const auto& seg : pw.segments)
        m = mul(segment_matrix(E - seg.value, seg.length), m);
      return m;
    }
    M2 operator()(const OracleDeltaComb& dc) const {
      M2 m{1.0, 0.0, 0.0, 1.0};
      double x = 0.0;
      for (const auto& imp : dc.impulses) {
        if (imp.position > x)
          m = mul(segment_matrix(E - dc.background, imp.position - x), m);
        m = mul(M2{1.0, 0.0, imp.strength, 1.0}, m);
        x = imp.position;
      }
      if (omega > x) m = mul(segment_matrix(E - dc.background, omega - x), m);
      return m;
    }
  };
  return std::visit(V{omega, E}, kind);
}

}  // namespace

MonodromyMatrix oracle_monodromy(const OracleKind& kind, double omega, cplx E) {
  M2 m = compute(kind, omega, E);
  double defect =
      std::abs(det2x2_compensated(m.a, m.b, m.c, m.d) - cplx(1.0, 0.0));
  return MonodromyMatrix{m.a, m.b, m.c, m.d, E, defect};
}

cplx oracle_discriminant(const OracleKind& kind, double omega, cplx E) {
  M2 m = compute(kind, omega, E);
  return 0.5 * (m.a + m.d);
}

}  // namespace hillspec
