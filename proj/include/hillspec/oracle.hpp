#pragma once

#include <variant>
#include <vector>

#include "hillspec/floquet.hpp"

namespace hillspec {

// Closed-form monodromy data for exactly solvable potentials; the ground
// truth the integrator is tested against.

struct OracleFree {};
struct OracleConstant {
  cplx value;
};
struct OraclePiecewise {
  std::vector<Segment> segments;  // lengths sum to omega
};
struct OracleDeltaComb {
  cplx background;
  std::vector<Impulse> impulses;
};

using OracleKind =
    std::variant<OracleFree, OracleConstant, OraclePiecewise, OracleDeltaComb>;

/// For free/constant potentials with k = sqrt(E - c) (principal branch):
/// M = [[cos(k w), sin(k w)/k], [-k sin(k w), cos(k w)]], with the k -> 0
/// entries continued by series. Piecewise: ordered product of per-segment
/// matrices; delta combs interleave jump matrices [[1,0],[s,1]].
MonodromyMatrix oracle_monodromy(const OracleKind& kind, double omega, cplx E);

/// Half-trace of oracle_monodromy; equals cos(omega * sqrt(E - c)) for
/// free/constant potentials, independent of the square-root branch.
cplx oracle_discriminant(const OracleKind& kind, double omega, cplx E);

}  // namespace hillspec
