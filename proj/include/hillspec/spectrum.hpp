#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hillspec/floquet.hpp"
#include "hillspec/potential.hpp"

namespace hillspec {

inline constexpr double kDefaultTraceTol = 1e-8;
inline constexpr double kDefaultOdeTol = 1e-10;

struct Box {
  double re_min, re_max, im_min, im_max;
  bool contains(cplx e) const {
    return e.real() >= re_min && e.real() <= re_max && e.imag() >= im_min &&
           e.imag() <= im_max;
  }
};

/// Tracing box derived from the potential's range bounds: the spectrum lies
/// in Re E >= re_min, im_min <= Im E <= im_max, so the box widens that strip
/// by `margin` and caps the unbounded Re direction at `re_max`.
Box widened_box(const SpectralBound& bound, double re_max, double margin);

/// Default tracing margin: small for range-exact potentials, and for delta
/// combs (whose impulses are excluded from the range bounds) a slack of
/// 10 + 2 * sum|s_j| / period.
double default_trace_margin(const PeriodicPotential& v);

/// Spectrum membership: Delta(E) real (within tol) and in [-1, 1] (within
/// tol). The equivalent unit-modulus multiplier criterion is evaluated
/// alongside at its matched tolerance (the Joukowski map is square-root
/// sensitive near Delta = +-1, so matching means | |rho|-1 | <= 2 sqrt(tol) +
/// 10 tol on the loose side and <= tol on the strict side); an irreconcilable
/// disagreement throws CriteriaMismatch.
bool in_spectrum(const PeriodicPotential& v, cplx e, double tol,
                 double ode_tol = kDefaultOdeTol);

/// Membership test on an already-computed discriminant value (exposed for
/// grid scans and tests).
bool membership(const DiscriminantValue& dv, double tol);

struct RealBand {
  double lo, hi;
};

struct RealScan {
  std::vector<double> energies;
  std::vector<cplx> delta;
  std::vector<cplx> delta_prime;
  std::vector<RealBand> bands;
  /// Brackets [lo, hi] inside bands where Re Delta' changes sign.
  std::vector<std::pair<double, double>> extremum_candidates;
};

RealScan scan_real_line(const PeriodicPotential& v, double e_min, double e_max,
                        int n, double tol = kDefaultTraceTol,
                        double ode_tol = kDefaultOdeTol);

struct ArcEndpoint {
  enum class Kind { None, BandEdge, CriticalPoint, BoxExit, StepLimit };
  Kind kind = Kind::None;
  cplx location{};
  int edge_sign = 0;  // +-1 when kind == BandEdge
  int order_k = 0;    // when kind == CriticalPoint; 0 if undetermined
};

struct TraceConfig {
  double step = 0.05;  // max distance between consecutive arc points
  double trace_tol = kDefaultTraceTol;
  int max_points = 20000;
  Box box{-10.0, 10.0, -10.0, 10.0};
  double ode_tol = kDefaultOdeTol;
};

struct SpectralArc {
  std::vector<cplx> points;
  std::vector<double> delta_values;  // Re Delta at each point
  ArcEndpoint start_kind, end_kind;
};

/// Predictor-corrector continuation of the level curve Im Delta = 0 from an
/// on-spectrum seed, both directions concatenated. Endpoints: Re Delta
/// leaving [-1,1] (band edge, bisected), |Delta'| under the critical
/// threshold (critical-point handoff), leaving the box, or the point budget.
SpectralArc trace_arc(const PeriodicPotential& v, cplx seed,
                      const TraceConfig& cfg);

/// Newton-projects an approximate point onto the Im Delta = 0 level curve,
/// then applies the membership test; empty when no on-spectrum point is
/// reachable from `approx`. The usual way to turn an emanating direction
/// into a trace seed.
std::optional<cplx> project_to_spectrum(const PeriodicPotential& v, cplx approx,
                                        double tol = kDefaultTraceTol,
                                        double ode_tol = kDefaultOdeTol);

struct BandEdge {
  cplx energy;
  int sign;     // Delta = +1 or -1
  bool simple;  // Delta' != 0 there
};

std::vector<BandEdge> find_band_edges(const PeriodicPotential& v,
                                      const Box& box, int grid_n,
                                      double ode_tol = kDefaultOdeTol);

enum class Regime { Interior, EdgePlus, EdgeMinus, OffSpectrum };

struct CriticalPoint {
  cplx e0;
  int order_k;    // smallest j >= 1 with Delta^(j)(e0) != 0
  cplx delta_at;  // Delta(e0)
  cplx leading;   // Delta^(order_k)(e0)
  Regime regime;
  std::vector<double> directions;  // spectral tangent directions, sorted
};

std::vector<CriticalPoint> find_critical_points(const PeriodicPotential& v,
                                                const Box& box, int grid_n,
                                                double ode_tol = kDefaultOdeTol);

/// Order/regime/direction analysis at an arbitrary point (order 1 at regular
/// points); find_critical_points applies this to each root of Delta'.
CriticalPoint local_shape_at(const PeriodicPotential& v, cplx e0,
                             double ode_tol = kDefaultOdeTol);

/// Directions arg(E - E0) = (j pi - arg delta_k) / k, j = 1..2k, at which the
/// discriminant stays real to leading order. Interior: all 2k, gaps pi/k.
/// Edge: the k of them along which Delta moves into [-1,1], gaps 2 pi/k.
std::vector<double> emanating_directions(cplx delta_k, int k, Regime regime);

struct LocalShapeReport {
  std::vector<double> measured_angles;
  std::vector<double> predicted_angles;
  double max_angle_error;
  int arcs_found;
};

/// Probes the circle |E - e0| = probe_radius for spectrum crossings and
/// compares them with cp.directions. A count disagreement throws
/// ArcCountMismatch carrying both counts.
LocalShapeReport verify_local_shape(const PeriodicPotential& v,
                                    const CriticalPoint& cp,
                                    double probe_radius,
                                    double ode_tol = kDefaultOdeTol);

inline double default_probe_radius(cplx e0) {
  return 1e-3 * (1.0 + std::abs(e0));
}

/// Probe radius shrunk so the discriminant's leading-order variation over the
/// circle stays well inside the margin between Delta(e0) and the band
/// boundary +-1. Near-degenerate gaps (Delta barely outside [-1,1]) would
/// otherwise put genuine spectrum inside the probe circle of an off-spectrum
/// point.
double adaptive_probe_radius(const CriticalPoint& cp);

struct NonrealCertificate {
  double extremum_e0;
  double delta_at;
  int order_k;
  std::vector<cplx> witness_points;  // on-spectrum, |Im E| >= 1e-4, conjugation-closed
};

struct DetectConfig {
  int scan_n = 401;
  double trace_tol = kDefaultTraceTol;
  double ode_tol = kDefaultOdeTol;
  double pt_tol = 1e-8;
  double interior_margin = 1e-6;  // extrema this close to +-1 are indeterminate
  double witness_min_im = 1e-4;
  double arc_step = 0.02;
  int max_arc_points = 4000;
};

/// The nonreal-spectrum detector for PT-symmetric potentials: every interior
/// local extremum of Delta on the real line (|Delta| < 1) forces 2k >= 4 arcs
/// through it, so off-axis arcs are traced from it and certified by on-
/// spectrum witnesses with |Im E| >= witness_min_im. Extrema within
/// interior_margin of +-1 are reported through `indeterminate_extrema`
/// instead of being classified; `interior_extrema` (when given) receives every
/// confirmed interior extremum whether or not its witnesses materialize, so a
/// dropped certificate is visible to the caller.
std::vector<NonrealCertificate> detect_nonreal_from_extremum(
    const PeriodicPotential& v, double e_min, double e_max,
    const DetectConfig& cfg = {},
    std::vector<double>* indeterminate_extrema = nullptr,
    std::vector<double>* interior_extrema = nullptr);

}  // namespace hillspec
