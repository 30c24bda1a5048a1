#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hillspec/floquet.hpp"
#include "hillspec/oracle.hpp"

using namespace hillspec;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicPotential free_pot(double omega) {
  return PeriodicPotential::fourier(omega, {});
}

PeriodicPotential i_sin() {
  return PeriodicPotential::fourier(2 * kPi,
                                    {{1, cplx(0.5, 0)}, {-1, cplx(-0.5, 0)}});
}

// d/dE cos(omega sqrt(E)) = -omega sin(omega sqrt(E)) / (2 sqrt(E))
cplx free_delta_prime(double omega, cplx E) {
  cplx k = std::sqrt(E);
  if (std::abs(k) < 1e-8) return cplx(-omega * omega / 2.0, 0.0);
  return -omega * std::sin(omega * k) / (2.0 * k);
}

}  // namespace

TEST_CASE("monodromy closed-form checks") {
  // V = 0, omega = pi, E = 1: cos(pi) = -1 on the diagonal
  MonodromyMatrix m = monodromy(free_pot(kPi), cplx(1, 0), 1e-11);
  CHECK(std::abs(m.a - cplx(-1, 0)) < 1e-9);
  CHECK(std::abs(m.b) < 1e-9);
  CHECK(std::abs(m.c) < 1e-9);
  CHECK(std::abs(m.d - cplx(-1, 0)) < 1e-9);
  CHECK(m.det_defect <= 1e-10);

  // V = 0, E = 0: solutions 1 and x
  m = monodromy(free_pot(1.3), cplx(0, 0), 1e-10);
  CHECK(std::abs(m.a - cplx(1, 0)) < 1e-10);
  CHECK(std::abs(m.b - cplx(1.3, 0)) < 1e-10);
  CHECK(std::abs(m.c) < 1e-10);
  CHECK(std::abs(m.d - cplx(1, 0)) < 1e-10);

  // V == i, E = i reduces to the free E = 0 matrix
  auto vi = PeriodicPotential::fourier(kPi, {{0, cplx(0, 1)}});
  m = monodromy(vi, cplx(0, 1), 1e-10);
  CHECK(std::abs(m.a - cplx(1, 0)) < 1e-9);
  CHECK(std::abs(m.b - cplx(kPi, 0)) < 1e-9);
  CHECK(std::abs(m.c) < 1e-9);
  CHECK(std::abs(m.d - cplx(1, 0)) < 1e-9);
}

TEST_CASE("tolerance validation and stiffness failure") {
  CHECK_THROWS_AS(monodromy(free_pot(kPi), cplx(1, 0), 1e-14),
                  InvalidTolerance);
  CHECK_THROWS_AS(monodromy(free_pot(kPi), cplx(1, 0), 1e-2), InvalidTolerance);
  // integrable singularity inside the period: the controller collapses
  auto singular = PeriodicPotential::expression(2.0, "1/(x-0.3)");
  CHECK_THROWS_AS(monodromy(singular, cplx(1, 0), 1e-10), StepSizeUnderflow);
}

TEST_CASE("discriminant closed-form values") {
  auto v = free_pot(2 * kPi);
  DiscriminantValue dv = discriminant(v, cplx(0.25, 0), 1e-11);
  CHECK(std::abs(dv.delta - cplx(-1, 0)) < 1e-9);
  CHECK(std::abs(dv.delta_prime) < 1e-8);  // -omega sin(pi)/(2 sqrt(E)) = 0

  dv = discriminant(v, cplx(0, 0), 1e-11);
  CHECK(std::abs(dv.delta - cplx(1, 0)) < 1e-9);

  dv = discriminant(v, cplx(-1, 0), 1e-11);
  CHECK(std::abs(dv.delta - cplx(std::cosh(2 * kPi), 0)) < 1e-7);
}

TEST_CASE("oracle equivalence on a coarse grid") {
  auto vfree = free_pot(kPi);
  auto vconst = PeriodicPotential::fourier(kPi, {{0, cplx(0, 1)}});
  std::vector<Segment> segs{{1.0, cplx(1, 0.5)}, {1.0, cplx(-0.5, -0.25)},
                            {1.0, cplx(0, 0.3)}};
  auto vpw = PeriodicPotential::piecewise(3.0, segs);
  OracleKind ofree = OracleFree{};
  OracleKind oconst = OracleConstant{cplx(0, 1)};
  OracleKind opw = OraclePiecewise{segs};

  struct Pair {
    const PeriodicPotential* v;
    const OracleKind* o;
    double omega;
  } pairs[] = {{&vfree, &ofree, kPi}, {&vconst, &oconst, kPi}, {&vpw, &opw, 3.0}};

  for (const auto& p : pairs) {
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) {
        cplx E(-5 + 10.0 * i / 6, -5 + 10.0 * j / 6);
        cplx mine = discriminant(*p.v, E, 1e-12).delta;
        cplx ref = oracle_discriminant(*p.o, p.omega, E);
        CHECK(std::abs(mine - ref) < 1e-8);
      }
  }
}

TEST_CASE("Wronskian conservation over the grid") {
  auto v = free_pot(kPi);
  auto vexpr = PeriodicPotential::expression(2 * kPi, "i*sin(x)^3");
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      cplx E(-5 + 10.0 * i / 6, -5 + 10.0 * j / 6);
      MonodromyMatrix m = monodromy(v, E, 1e-11);
      CHECK(m.det_defect < 1e-8);
      // at moderate norms the entrywise determinant agrees
      CHECK(std::abs(det2x2_compensated(m.a, m.b, m.c, m.d) - cplx(1, 0)) <
            1e-8);
      CHECK(monodromy(vexpr, E, 1e-11).det_defect < 1e-8);
    }
}

TEST_CASE("multipliers") {
  FloquetMultipliers fm = multipliers_of(cplx(1, 0));
  CHECK(fm.rho1 == cplx(1, 0));
  CHECK(fm.rho2 == cplx(1, 0));

  fm = multipliers_of(cplx(0, 0));  // tie on the unit circle: Im >= 0 wins
  CHECK(std::abs(fm.rho1 - cplx(0, 1)) < 1e-15);
  CHECK(std::abs(fm.rho2 - cplx(0, -1)) < 1e-15);

  double big = std::cosh(2 * kPi);
  fm = multipliers_of(cplx(big, 0));
  CHECK(std::abs(fm.rho1 - std::exp(2 * kPi)) / std::exp(2 * kPi) < 1e-12);
  CHECK(std::abs(fm.rho2 - std::exp(-2 * kPi)) < 1e-12);

  // rho1 * rho2 = 1 holds to rounding by construction
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    fm = multipliers_of(cplx(u(rng), u(rng)));
    CHECK(std::abs(fm.rho1 * fm.rho2 - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(fm.rho1) >= std::abs(fm.rho2) * (1 - 1e-12));
  }
}

TEST_CASE("multipliers sum to twice the discriminant") {
  auto v = i_sin();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    DiscriminantValue dv = discriminant(v, cplx(u(rng), u(rng)), 1e-11);
    FloquetMultipliers fm = multipliers(dv);
    CHECK(std::abs(fm.rho1 + fm.rho2 - 2.0 * dv.delta) <
          1e-8 * (1 + std::abs(dv.delta)));
  }
}

TEST_CASE("variational Delta' agrees with the closed form and central FD") {
  auto v = i_sin();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ur(0.0, 5.0), ui(-0.5, 0.5);
  for (int t = 0; t < 12; ++t) {
    cplx E(ur(rng), ui(rng));
    DiscriminantValue dv = discriminant(v, E, 1e-12);
    double h = 1e-5;
    cplx fd = (discriminant(v, E + h, 1e-12).delta -
               discriminant(v, E - h, 1e-12).delta) /
              (2.0 * h);
    CHECK(std::abs(fd - dv.delta_prime) <=
          1e-6 * std::max(1.0, std::abs(dv.delta_prime)));
  }
  // free potential: exact formula
  auto vf = free_pot(kPi);
  for (cplx E : {cplx(0.3, 0.0), cplx(2.5, 0.4), cplx(-1.0, 0.2)}) {
    DiscriminantValue dv = discriminant(vf, E, 1e-12);
    CHECK(std::abs(dv.delta_prime - free_delta_prime(kPi, E)) < 1e-9);
  }
}

TEST_CASE("PT conjugation symmetry and reality of est_error bound") {
  auto v = i_sin();
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(-1.0, 4.0), ui(-1.0, 1.0);
  for (int t = 0; t < 12; ++t) {
    cplx E(u(rng), ui(rng));
    cplx d1 = discriminant(v, E, 1e-11).delta;
    cplx d2 = discriminant(v, std::conj(E), 1e-11).delta;
    CHECK(std::abs(std::conj(d2) - d1) < 1e-8);
  }
  // |Im Delta| <= 10 * est_error on the real axis for PT potentials
  auto pw = PeriodicPotential::piecewise(
      2.0, {{1.0, cplx(0.4, 0.7)}, {1.0, cplx(0.4, -0.7)}});
  for (int t = 0; t < 60; ++t) {
    double e = -1.0 + 8.0 * t / 59;
    DiscriminantValue dv = discriminant(v, cplx(e, 0), 1e-10);
    CHECK(std::abs(dv.delta.imag()) <= 10 * dv.est_error);
    DiscriminantValue dw = discriminant(pw, cplx(e, 0), 1e-10);
    CHECK(std::abs(dw.delta.imag()) <= 10 * dw.est_error);
  }
}

TEST_CASE("constant-shift covariance") {
  auto v = i_sin();
  cplx shift(0.7, -0.3);
  std::vector<FourierTerm> shifted{{1, cplx(0.5, 0)}, {-1, cplx(-0.5, 0)},
                                   {0, shift}};
  auto vs = PeriodicPotential::fourier(2 * kPi, shifted);
  for (cplx E : {cplx(0.5, 0.1), cplx(2.0, -0.4), cplx(-1.0, 0.8)}) {
    cplx base = discriminant(v, E, 1e-11).delta;
    cplx moved = discriminant(vs, E + shift, 1e-11).delta;
    CHECK(std::abs(base - moved) < 1e-8);
  }
}

TEST_CASE("delta comb jump handling against the closed form") {
  auto dc = PeriodicPotential::delta_comb(2.0, cplx(0, 0),
                                          {{0.5, cplx(1.7, -0.3)}});
  cplx E(2.3, 0.4), k = std::sqrt(E);
  cplx want =
      std::cos(k * 2.0) + cplx(1.7, -0.3) * std::sin(k * 2.0) / (2.0 * k);
  CHECK(std::abs(discriminant(dc, E, 1e-11).delta - want) < 1e-12);
}

TEST_CASE("derivatives_at: free potential Taylor data") {
  auto v = free_pot(kPi);
  DerivativeSet ds = derivatives_at(v, cplx(1, 0), 4, 0.1, 1e-12);
  CHECK(std::abs(ds.values[0] - cplx(-1, 0)) < 1e-10);
  CHECK(std::abs(ds.values[1]) < 1e-9);
  CHECK(std::abs(ds.values[2] - cplx(kPi * kPi / 4, 0)) < 1e-6);

  ds = derivatives_at(v, cplx(0.25, 0), 2, 0.1, 1e-12);
  CHECK(std::abs(ds.values[1] - cplx(-kPi, 0)) < 1e-9);

  // entries 0 and 1 line up with the direct discriminant by construction
  DiscriminantValue dv = discriminant(v, cplx(0.25, 0), 1e-12);
  CHECK(ds.values[0] == dv.delta);
  CHECK(ds.values[1] == dv.delta_prime);
  CHECK(std::abs(ds.cauchy_delta_prime - dv.delta_prime) < 1e-9);
}

TEST_CASE("derivatives_at input validation") {
  auto v = free_pot(kPi);
  CHECK_THROWS_AS(derivatives_at(v, cplx(1, 0), 0, 0.1, 1e-10), DomainError);
  CHECK_THROWS_AS(derivatives_at(v, cplx(1, 0), 13, 0.1, 1e-10), DomainError);
  CHECK_THROWS_AS(derivatives_at(v, cplx(1, 0), 3, -0.5, 1e-10), DomainError);
}
