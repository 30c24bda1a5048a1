#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hillspec/oracle.hpp"

using namespace hillspec;

namespace {

constexpr double kPi = std::numbers::pi;

double mat_distance(const MonodromyMatrix& m, cplx a, cplx b, cplx c, cplx d) {
  return std::max(std::max(std::abs(m.a - a), std::abs(m.b - b)),
                  std::max(std::abs(m.c - c), std::abs(m.d - d)));
}

}  // namespace

TEST_CASE("free potential closed forms") {
  // omega = pi, E = 4: k = 2, k*omega = 2*pi -> identity matrix
  MonodromyMatrix m = oracle_monodromy(OracleFree{}, kPi, cplx(4, 0));
  CHECK(mat_distance(m, 1, 0, 0, 1) < 1e-14);

  // E = 0 limit: [[1, omega], [0, 1]]
  m = oracle_monodromy(OracleFree{}, 0.7, cplx(0, 0));
  CHECK(mat_distance(m, 1, 0.7, 0, 1) < 1e-14);

  CHECK(std::abs(oracle_discriminant(OracleFree{}, 2 * kPi, cplx(0.25, 0)) -
                 cplx(-1, 0)) < 1e-14);
  CHECK(oracle_discriminant(OracleFree{}, 2 * kPi, cplx(0, 0)) == cplx(1, 0));
}

TEST_CASE("constant shift closed forms") {
  // V == i, E = i: k = 0 -> [[1, omega], [0, 1]]
  MonodromyMatrix m =
      oracle_monodromy(OracleConstant{cplx(0, 1)}, kPi, cplx(0, 1));
  CHECK(mat_distance(m, 1, kPi, 0, 1) < 1e-14);

  // V == i, E = i + 1: cos(pi * 1) = -1
  CHECK(std::abs(oracle_discriminant(OracleConstant{cplx(0, 1)}, kPi,
                                     cplx(1, 1)) -
                 cplx(-1, 0)) < 1e-14);
}

TEST_CASE("two-segment product matches hand multiplication") {
  // segments (1, 0) then (1, 1) at E = 1: first factor is the free matrix at
  // k = 1, second has k = 0.
  OracleKind kind = OraclePiecewise{{{1.0, cplx(0, 0)}, {1.0, cplx(1, 0)}}};
  MonodromyMatrix m = oracle_monodromy(kind, 2.0, cplx(1, 0));
  double c1 = std::cos(1.0), s1 = std::sin(1.0);
  // T2 * T1 with T1 = [[cos 1, sin 1], [-sin 1, cos 1]], T2 = [[1, 1], [0, 1]]
  cplx a = c1 - s1, b = s1 + c1, c = -s1, d = c1;
  CHECK(mat_distance(m, a, b, c, d) < 1e-14);
}

TEST_CASE("delta comb interleaves unit-determinant jumps") {
  OracleKind kind = OracleDeltaComb{cplx(0, 0), {{0.5, cplx(1.7, -0.3)}}};
  cplx E(2.3, 0.4);
  cplx k = std::sqrt(E);
  // single impulse s on a free background: Delta = cos(k w) + s sin(k w)/(2k)
  cplx want = std::cos(k * 2.0) + cplx(1.7, -0.3) * std::sin(k * 2.0) / (2.0 * k);
  CHECK(std::abs(oracle_discriminant(kind, 2.0, E) - want) < 1e-14);
}

TEST_CASE("unit determinant to rounding over a grid") {
  OracleKind kinds[] = {
      OracleFree{}, OracleConstant{cplx(0.3, 0.8)},
      OraclePiecewise{{{1.0, cplx(1, 0.5)}, {2.0, cplx(-0.5, -0.2)}}},
      OracleDeltaComb{cplx(0.2, 0.1), {{0.7, cplx(0.5, 0)}, {2.0, cplx(-0.3, 0.2)}}}};
  for (const auto& kind : kinds) {
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) {
        cplx E(-5 + 10.0 * i / 8, -5 + 10.0 * j / 8);
        MonodromyMatrix m = oracle_monodromy(kind, 3.0, E);
        // each factor has unit determinant; the drift is pure rounding,
        // scaled by the squared factor norms (up to ~1e2 on this grid)
        CHECK(m.det_defect < 1e-9);
        CHECK(std::abs(det2x2_compensated(m.a, m.b, m.c, m.d) - cplx(1, 0)) <
              1e-8);
      }
  }
}

TEST_CASE("branch safety: discriminant is even in the square root") {
  // cos(omega k) with k = +-sqrt(E - c): evaluate both branches directly.
  for (cplx E : {cplx(2.0, 1.0), cplx(-3.0, -0.5), cplx(0.1, 0.0)}) {
    cplx k = std::sqrt(E);
    cplx plus = std::cos(2.0 * k);
    cplx minus = std::cos(2.0 * (-k));
    CHECK(std::abs(plus - minus) == 0.0);
    CHECK(std::abs(oracle_discriminant(OracleFree{}, 2.0, E) - plus) < 1e-12);
  }
}

TEST_CASE("series continuation near k = 0 is smooth") {
  // compare the series region against the closed form just outside it
  for (double mag : {1e-13, 1e-12, 1e-11, 1e-10}) {
    cplx E(mag, mag / 3);
    cplx direct = std::cos(1.5 * std::sqrt(E));
    CHECK(std::abs(oracle_discriminant(OracleFree{}, 1.5, E) - direct) <
          1e-13);
  }
}
