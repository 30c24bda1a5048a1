#include "hillspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace hillspec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CurvePoint {
  cplx e;
  DiscriminantValue dv;
};

double dot(cplx a, cplx b) { return (a * std::conj(b)).real(); }

// Unit tangent of the level curve Im Delta = 0: moving along conj(Delta')
// changes Delta by |Delta'|^2 ds, i.e. along the real axis.
cplx tangent_of(const DiscriminantValue& dv) {
  return std::conj(dv.delta_prime) / std::abs(dv.delta_prime);
}

double circular_gap(double a, double b) {
  double d = std::abs(a - b);
  return std::min(d, kTwoPi - d);
}

// Newton onto Im Delta = 0 along the locally steepest direction.
std::optional<CurvePoint> correct_free(const PeriodicPotential& v, cplx start,
                                       double resid_target, double ode_tol,
                                       int max_iter = 10) {
  cplx e = start;
  for (int it = 0; it < max_iter; ++it) {
    DiscriminantValue dv = discriminant(v, e, ode_tol);
    double r = dv.delta.imag();
    if (std::abs(r) <= resid_target) return CurvePoint{e, dv};
    double slope = std::abs(dv.delta_prime);
    if (slope < 1e-13) return std::nullopt;
    cplx n = cplx(0.0, 1.0) * std::conj(dv.delta_prime) / slope;
    e -= (r / slope) * n;
  }
  DiscriminantValue dv = discriminant(v, e, ode_tol);
  if (std::abs(dv.delta.imag()) <= resid_target) return CurvePoint{e, dv};
  return std::nullopt;
}

// Newton onto Im Delta = 0 restricted to the line start + s * n_unit.
std::optional<CurvePoint> correct_on_line(const PeriodicPotential& v,
                                          cplx start, cplx n_unit,
                                          double resid_target, double ode_tol,
                                          int max_iter = 8) {
  cplx e = start;
  for (int it = 0; it < max_iter; ++it) {
    DiscriminantValue dv = discriminant(v, e, ode_tol);
    double r = dv.delta.imag();
    if (std::abs(r) <= resid_target) return CurvePoint{e, dv};
    double g = (dv.delta_prime * n_unit).imag();
    if (std::abs(g) < 1e-13) return std::nullopt;
    e -= (r / g) * n_unit;
  }
  DiscriminantValue dv = discriminant(v, e, ode_tol);
  if (std::abs(dv.delta.imag()) <= resid_target) return CurvePoint{e, dv};
  return std::nullopt;
}

// Newton on Delta' (second derivative by central differences).
cplx refine_critical(const PeriodicPotential& v, cplx e_start, double ode_tol) {
  cplx e = e_start;
  for (int it = 0; it < 30; ++it) {
    DiscriminantValue dv = discriminant(v, e, ode_tol);
    double h = 1e-5 * (1.0 + std::abs(e));
    cplx d2 = (discriminant(v, e + h, ode_tol).delta_prime -
               discriminant(v, e - h, ode_tol).delta_prime) /
              (2.0 * h);
    if (std::abs(d2) < 1e-13) break;
    cplx step = dv.delta_prime / d2;
    e -= step;
    if (std::abs(step) <= 1e-12 * (1.0 + std::abs(e))) break;
  }
  return e;
}

cplx fd_second_derivative(const PeriodicPotential& v, cplx e, double ode_tol) {
  double h = 1e-5 * (1.0 + std::abs(e));
  return (discriminant(v, e + h, ode_tol).delta_prime -
          discriminant(v, e - h, ode_tol).delta_prime) /
         (2.0 * h);
}

double critical_threshold(double d2_estimate) {
  return 1e-7 * (1.0 + d2_estimate);
}

}  // namespace

Box widened_box(const SpectralBound& bound, double re_max, double margin) {
  double re_min = std::isfinite(bound.re_min) ? bound.re_min - margin
                                              : re_max - 1e6;
  return Box{re_min, re_max, bound.im_min - margin, bound.im_max + margin};
}

double default_trace_margin(const PeriodicPotential& v) {
  if (const auto* dc = std::get_if<DeltaComb>(&v.body())) {
    double total = 0.0;
    for (const auto& imp : dc->impulses) total += std::abs(imp.strength);
    return 10.0 + 2.0 * total / v.period();
  }
  return 0.5;
}

bool membership(const DiscriminantValue& dv, double tol) {
  return std::abs(dv.delta.imag()) <= tol && dv.delta.real() >= -1.0 - tol &&
         dv.delta.real() <= 1.0 + tol;
}

bool in_spectrum(const PeriodicPotential& v, cplx e, double tol,
                 double ode_tol) {
  if (!(tol > 0.0)) throw DomainError("membership tolerance must be positive");
  DiscriminantValue dv = discriminant(v, e, ode_tol);
  bool crit_delta = membership(dv, tol);
  FloquetMultipliers fm = multipliers(dv);
  double s = std::abs(std::abs(fm.rho1) - 1.0);
  // Matched tolerances: the Joukowski map is square-root sensitive near the
  // band edges, so a discriminant within tol of [-1,1] only pins |rho| to
  // within ~2 sqrt(tol); conversely |rho| within tol of 1 pins the
  // discriminant to within tol.
  bool rho_loose = s <= 2.0 * std::sqrt(tol) + 10.0 * tol;
  bool rho_strict = s <= tol * 0.999999 - 1e-14 * (1.0 + std::abs(dv.delta));
  if (crit_delta && !rho_loose)
    throw CriteriaMismatch(
        "discriminant criterion accepts but the multiplier modulus is far "
        "from 1");
  if (!crit_delta && rho_strict)
    throw CriteriaMismatch(
        "multiplier modulus is 1 but the discriminant criterion rejects");
  return crit_delta;
}

// ---------------------------------------------------------------------------
// Real-line scan.

RealScan scan_real_line(const PeriodicPotential& v, double e_min, double e_max,
                        int n, double tol, double ode_tol) {
  if (!(e_min < e_max)) throw DomainError("scan window is empty");
  if (n < 2) throw DomainError("scan needs at least two samples");

  RealScan out;
  out.energies.reserve(n);
  out.delta.reserve(n);
  out.delta_prime.reserve(n);
  std::vector<bool> in_band(n);
  for (int i = 0; i < n; ++i) {
    double e = e_min + (e_max - e_min) * i / (n - 1);
    DiscriminantValue dv = discriminant(v, cplx(e, 0.0), ode_tol);
    out.energies.push_back(e);
    out.delta.push_back(dv.delta);
    out.delta_prime.push_back(dv.delta_prime);
    in_band[i] = membership(dv, tol);
  }

  auto member_at = [&](double e) {
    return membership(discriminant(v, cplx(e, 0.0), ode_tol), tol);
  };
  // Predicate bisection between an in-band and an out-of-band sample.
  auto refine_boundary = [&](double inside, double outside) {
    while (std::abs(outside - inside) > 1e-10) {
      double mid = 0.5 * (inside + outside);
      if (member_at(mid))
        inside = mid;
      else
        outside = mid;
    }
    return inside;
  };

  int i = 0;
  while (i < n) {
    if (!in_band[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && in_band[j + 1]) ++j;
    double lo = (i == 0) ? out.energies.front()
                         : refine_boundary(out.energies[i], out.energies[i - 1]);
    double hi = (j == n - 1)
                    ? out.energies.back()
                    : refine_boundary(out.energies[j], out.energies[j + 1]);
    out.bands.push_back(RealBand{lo, hi});
    for (int k = i; k < j; ++k) {
      double a = out.delta_prime[k].real();
      double b = out.delta_prime[k + 1].real();
      if (a == 0.0 || a * b < 0.0)
        out.extremum_candidates.emplace_back(out.energies[k],
                                             out.energies[k + 1]);
    }
    i = j + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Arc tracing.

namespace {

struct DirectionTrace {
  std::vector<cplx> points;
  std::vector<double> deltas;
  ArcEndpoint end;
};

// Bisects along the segment [inside, outside] (corrected back onto the curve
// at each probe) for the point where Re Delta reaches the band boundary
// `sign`.
CurvePoint bisect_band_edge(const PeriodicPotential& v, CurvePoint inside,
                            const CurvePoint& outside, int sign,
                            const TraceConfig& cfg) {
  double lo = 0.0, hi = 1.0;
  const cplx base = inside.e;
  const cplx span = outside.e - inside.e;
  CurvePoint best = inside;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    auto corr = correct_free(v, base + mid * span, 0.1 * cfg.trace_tol,
                             cfg.ode_tol);
    if (!corr) {
      hi = mid;
      continue;
    }
    double g = (corr->dv.delta.real() - sign) * sign;
    if (std::abs(corr->dv.delta.real() - sign) <= 1e-10) return *corr;
    if (g < 0.0) {
      lo = mid;
      best = *corr;
    } else {
      hi = mid;
    }
  }
  return best;
}

DirectionTrace trace_direction(const PeriodicPotential& v,
                               const CurvePoint& seed, double sign,
                               const TraceConfig& cfg, int budget) {
  DirectionTrace out;
  CurvePoint cur = seed;
  cplx prev_dir = sign * tangent_of(seed.dv);
  double step_cur = cfg.step;

  while (static_cast<int>(out.points.size()) < budget) {
    cplx t = tangent_of(cur.dv);
    if (dot(t, prev_dir) < 0.0) t = -t;

    std::optional<CurvePoint> next;
    double eff = step_cur;
    for (int attempt = 0; attempt < 6; ++attempt, eff *= 0.5) {
      cplx pred = cur.e + 0.8 * eff * t;
      cplx normal = cplx(0.0, 1.0) * t;
      auto corr =
          correct_on_line(v, pred, normal, 0.1 * cfg.trace_tol, cfg.ode_tol);
      if (corr && std::abs(corr->e - cur.e) <= cfg.step &&
          std::abs(corr->e - cur.e) > 0.0) {
        next = corr;
        break;
      }
    }
    if (!next)
      throw CorrectorDiverged(
          "arc corrector failed to reduce Im Delta after step halving");
    step_cur = std::min(cfg.step, 2.0 * eff);

    // Critical-point handoff: Newton conditioning degrades as 1/|Delta'|.
    cplx d2_est = (next->dv.delta_prime - cur.dv.delta_prime) /
                  (next->e - cur.e);
    if (std::abs(next->dv.delta_prime) <
        critical_threshold(std::abs(d2_est))) {
      cplx e0 = refine_critical(v, next->e, cfg.ode_tol);
      int order = 0;
      try {
        order = local_shape_at(v, e0, cfg.ode_tol).order_k;
      } catch (const OrderUndetermined&) {
      } catch (const InconsistentDerivative&) {
      }
      out.points.push_back(next->e);
      out.deltas.push_back(next->dv.delta.real());
      out.end = ArcEndpoint{ArcEndpoint::Kind::CriticalPoint, e0, 0, order};
      return out;
    }

    double re_d = next->dv.delta.real();
    if (re_d > 1.0 + cfg.trace_tol || re_d < -1.0 - cfg.trace_tol) {
      int edge_sign = re_d > 0.0 ? 1 : -1;
      CurvePoint edge = bisect_band_edge(v, cur, *next, edge_sign, cfg);
      out.points.push_back(edge.e);
      out.deltas.push_back(edge.dv.delta.real());
      out.end =
          ArcEndpoint{ArcEndpoint::Kind::BandEdge, edge.e, edge_sign, 0};
      return out;
    }

    if (!cfg.box.contains(next->e)) {
      out.points.push_back(next->e);
      out.deltas.push_back(next->dv.delta.real());
      out.end = ArcEndpoint{ArcEndpoint::Kind::BoxExit, next->e, 0, 0};
      return out;
    }

    out.points.push_back(next->e);
    out.deltas.push_back(next->dv.delta.real());
    prev_dir = (next->e - cur.e) / std::abs(next->e - cur.e);
    cur = *next;
  }
  out.end = ArcEndpoint{ArcEndpoint::Kind::StepLimit, cur.e, 0, 0};
  return out;
}

}  // namespace

SpectralArc trace_arc(const PeriodicPotential& v, cplx seed,
                      const TraceConfig& cfg) {
  DiscriminantValue dv = discriminant(v, seed, cfg.ode_tol);
  if (!membership(dv, cfg.trace_tol))
    throw SeedNotOnSpectrum("trace seed fails the spectrum membership test");
  if (std::abs(dv.delta_prime) < critical_threshold(std::abs(
          fd_second_derivative(v, seed, cfg.ode_tol))))
    throw DomainError(
        "trace seed sits at a critical point; seed from its emanating "
        "directions instead");

  CurvePoint start{seed, dv};
  if (auto corr = correct_free(v, seed, 0.1 * cfg.trace_tol, cfg.ode_tol))
    start = *corr;

  int budget = std::max(1, cfg.max_points - 1);
  DirectionTrace back = trace_direction(v, start, -1.0, cfg, budget / 2);
  DirectionTrace fwd = trace_direction(
      v, start, +1.0, cfg, budget - static_cast<int>(back.points.size()));

  SpectralArc arc;
  arc.points.reserve(back.points.size() + fwd.points.size() + 1);
  arc.delta_values.reserve(back.points.size() + fwd.points.size() + 1);
  for (std::size_t i = back.points.size(); i-- > 0;) {
    arc.points.push_back(back.points[i]);
    arc.delta_values.push_back(back.deltas[i]);
  }
  arc.points.push_back(start.e);
  arc.delta_values.push_back(start.dv.delta.real());
  for (std::size_t i = 0; i < fwd.points.size(); ++i) {
    arc.points.push_back(fwd.points[i]);
    arc.delta_values.push_back(fwd.deltas[i]);
  }
  arc.start_kind = back.end;
  arc.end_kind = fwd.end;
  // Deterministic orientation: first point precedes the last one
  // lexicographically in (Re, Im).
  if (!arc.points.empty()) {
    cplx first = arc.points.front(), last = arc.points.back();
    bool flip = last.real() < first.real() ||
                (last.real() == first.real() && last.imag() < first.imag());
    if (flip) {
      std::reverse(arc.points.begin(), arc.points.end());
      std::reverse(arc.delta_values.begin(), arc.delta_values.end());
      std::swap(arc.start_kind, arc.end_kind);
    }
  }
  return arc;
}

// ---------------------------------------------------------------------------
// Root finding on the grid.

namespace {

struct GridValues {
  int n;
  Box box;
  std::vector<DiscriminantValue> dv;  // row-major, n x n

  cplx node(int i, int j) const {
    return cplx(box.re_min + (box.re_max - box.re_min) * i / (n - 1),
                box.im_min + (box.im_max - box.im_min) * j / (n - 1));
  }
  const DiscriminantValue& at(int i, int j) const { return dv[i * n + j]; }
};

GridValues evaluate_grid(const PeriodicPotential& v, const Box& box, int n,
                         double ode_tol) {
  GridValues g;
  g.n = n;
  g.box = box;
  g.dv.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g.dv.push_back(discriminant(v, g.node(i, j), ode_tol));
  return g;
}

// Candidate starting points for complex Newton: nodes where |f| is a local
// minimum plus cells whose corners change sign in both Re f and Im f.
template <class F>
std::vector<cplx> newton_candidates(const GridValues& g, F&& f) {
  std::vector<cplx> out;
  const int n = g.n;
  auto absf = [&](int i, int j) { return std::abs(f(g.at(i, j))); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double c = absf(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1 && is_min; ++dj) {
          int ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= n || nj >= n || (di == 0 && dj == 0))
            continue;
          if (absf(ni, nj) < c) is_min = false;
        }
      if (is_min) out.push_back(g.node(i, j));
    }
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      cplx f00 = f(g.at(i, j)), f10 = f(g.at(i + 1, j));
      cplx f01 = f(g.at(i, j + 1)), f11 = f(g.at(i + 1, j + 1));
      auto spans = [](double a, double b, double c, double d) {
        return std::min(std::min(a, b), std::min(c, d)) < 0.0 &&
               std::max(std::max(a, b), std::max(c, d)) > 0.0;
      };
      if (spans(f00.real(), f10.real(), f01.real(), f11.real()) &&
          spans(f00.imag(), f10.imag(), f01.imag(), f11.imag()))
        out.push_back(0.5 * (g.node(i, j) + g.node(i + 1, j + 1)));
    }
  return out;
}

bool near_duplicate(const std::vector<cplx>& roots, cplx e) {
  for (cplx r : roots)
    if (std::abs(r - e) <= 1e-7 * (1.0 + std::abs(e))) return true;
  return false;
}

bool inside_box(const Box& box, cplx e) {
  double slack_re = 1e-9 * (1.0 + std::abs(box.re_max) + std::abs(box.re_min));
  double slack_im = 1e-9 * (1.0 + std::abs(box.im_max) + std::abs(box.im_min));
  return e.real() >= box.re_min - slack_re &&
         e.real() <= box.re_max + slack_re &&
         e.imag() >= box.im_min - slack_im && e.imag() <= box.im_max + slack_im;
}

}  // namespace

std::optional<cplx> project_to_spectrum(const PeriodicPotential& v, cplx approx,
                                        double tol, double ode_tol) {
  auto corr = correct_free(v, approx, 0.1 * tol, ode_tol);
  if (corr && membership(corr->dv, tol)) return corr->e;
  return std::nullopt;
}

std::vector<BandEdge> find_band_edges(const PeriodicPotential& v,
                                      const Box& box, int grid_n,
                                      double ode_tol) {
  if (grid_n < 4) throw DomainError("edge search grid must be at least 4x4");
  GridValues grid = evaluate_grid(v, box, grid_n, ode_tol);
  const double diag = std::hypot(box.re_max - box.re_min,
                                 box.im_max - box.im_min);

  std::vector<BandEdge> edges;
  std::vector<cplx> roots;
  for (int sign : {+1, -1}) {
    auto f = [sign](const DiscriminantValue& dv) {
      return dv.delta - cplx(sign, 0.0);
    };
    for (cplx start : newton_candidates(grid, f)) {
      cplx e = start;
      bool converged = false;
      for (int it = 0; it < 40; ++it) {
        DiscriminantValue dv = discriminant(v, e, ode_tol);
        cplx fv = f(dv);
        // Near a double root Newton stalls once |f| reaches the integrator
        // noise floor; that residual level is already a root fix.
        if (std::abs(fv) <= 1e-10) {
          converged = true;
          break;
        }
        if (std::abs(dv.delta_prime) < 1e-14) break;
        cplx step = fv / dv.delta_prime;
        e -= step;
        if (std::abs(e - start) > 2.0 * diag) break;
        if (std::abs(step) <= 1e-11 * (1.0 + std::abs(e))) {
          converged = true;
          break;
        }
      }
      if (!converged || !inside_box(box, e)) continue;

      DiscriminantValue dv = discriminant(v, e, ode_tol);
      cplx d2 = fd_second_derivative(v, e, ode_tol);
      // If a critical point sits within Newton-step reach, the edge may be a
      // double root whose position stalled at the noise floor; polishing on
      // Delta' restores quadratic convergence there.
      if (std::abs(d2) > 1e-13 &&
          std::abs(dv.delta_prime / d2) <= 1e-3 * (1.0 + std::abs(e))) {
        cplx polished = refine_critical(v, e, ode_tol);
        DiscriminantValue dvp = discriminant(v, polished, ode_tol);
        if (inside_box(box, polished) &&
            std::abs(dvp.delta - cplx(sign, 0.0)) <= 1e-8) {
          e = polished;
          dv = dvp;
          d2 = fd_second_derivative(v, e, ode_tol);
        }
      }
      if (std::abs(dv.delta - cplx(sign, 0.0)) > 1e-8) continue;
      if (near_duplicate(roots, e)) continue;
      bool simple =
          std::abs(dv.delta_prime) > critical_threshold(std::abs(d2));
      roots.push_back(e);
      edges.push_back(BandEdge{e, sign, simple});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const BandEdge& a, const BandEdge& b) {
    if (a.energy.real() != b.energy.real())
      return a.energy.real() < b.energy.real();
    return a.energy.imag() < b.energy.imag();
  });
  return edges;
}

CriticalPoint local_shape_at(const PeriodicPotential& v, cplx e0,
                             double ode_tol) {
  DerivativeSet ds =
      derivatives_at(v, e0, 12, default_cauchy_radius(e0), ode_tol);
  int k = 0;
  double factorial = 1.0;
  double rpow = ds.radius_used;
  for (int j = 1; j <= 12; ++j) {
    factorial *= j;
    // Noise floor of the trapezoid contour rule for the j-th derivative.
    double threshold = factorial / rpow * ds.max_abs_on_circle * 1e-6;
    if (std::abs(ds.values[j]) > threshold) {
      k = j;
      break;
    }
    rpow *= ds.radius_used;
  }
  if (k == 0)
    throw OrderUndetermined(
        "all discriminant derivatives through order 12 sit below the contour "
        "noise floor");

  cplx delta0 = ds.values[0];
  Regime regime;
  if (std::abs(delta0.imag()) > 1e-8) {
    regime = Regime::OffSpectrum;
  } else if (std::abs(delta0.real() - 1.0) <= 1e-6) {
    regime = Regime::EdgePlus;
  } else if (std::abs(delta0.real() + 1.0) <= 1e-6) {
    regime = Regime::EdgeMinus;
  } else if (delta0.real() > -1.0 && delta0.real() < 1.0) {
    regime = Regime::Interior;
  } else {
    regime = Regime::OffSpectrum;
  }
  return CriticalPoint{e0, k, delta0, ds.values[k], regime,
                       emanating_directions(ds.values[k], k, regime)};
}

double adaptive_probe_radius(const CriticalPoint& cp) {
  double r = default_probe_radius(cp.e0);
  if (cp.order_k < 1 || std::abs(cp.leading) == 0.0) return r;
  // margin between Delta(e0) and the nearest band boundary
  double margin = 0.0;
  if (cp.regime == Regime::Interior) {
    margin = 1.0 - std::abs(cp.delta_at.real());
  } else if (cp.regime == Regime::OffSpectrum) {
    double over = std::max(std::abs(cp.delta_at.real()) - 1.0, 0.0);
    margin = std::hypot(over, cp.delta_at.imag());
  } else {
    return r;  // edge points: the crossings emanate from e0 at any radius
  }
  if (!(margin > 0.0)) return r;
  double factorial = 1.0;
  for (int j = 2; j <= cp.order_k; ++j) factorial *= j;
  double cap = std::pow(0.25 * factorial * margin / std::abs(cp.leading),
                        1.0 / cp.order_k);
  return std::min(r, cap);
}

std::vector<CriticalPoint> find_critical_points(const PeriodicPotential& v,
                                                const Box& box, int grid_n,
                                                double ode_tol) {
  if (grid_n < 4)
    throw DomainError("critical-point search grid must be at least 4x4");
  GridValues grid = evaluate_grid(v, box, grid_n, ode_tol);
  const double diag = std::hypot(box.re_max - box.re_min,
                                 box.im_max - box.im_min);

  auto f = [](const DiscriminantValue& dv) { return dv.delta_prime; };
  std::vector<cplx> roots;
  std::vector<CriticalPoint> points;
  for (cplx start : newton_candidates(grid, f)) {
    cplx e = start;
    bool converged = false;
    for (int it = 0; it < 30; ++it) {
      DiscriminantValue dv = discriminant(v, e, ode_tol);
      cplx d2 = fd_second_derivative(v, e, ode_tol);
      if (std::abs(d2) < 1e-13) break;
      cplx step = dv.delta_prime / d2;
      e -= step;
      if (std::abs(e - start) > 2.0 * diag) break;
      if (std::abs(step) <= 1e-12 * (1.0 + std::abs(e))) {
        converged = true;
        break;
      }
    }
    if (!converged || !inside_box(box, e) || near_duplicate(roots, e)) continue;
    DiscriminantValue dv = discriminant(v, e, ode_tol);
    cplx d2 = fd_second_derivative(v, e, ode_tol);
    if (std::abs(dv.delta_prime) > critical_threshold(std::abs(d2))) continue;

    CriticalPoint cp = local_shape_at(v, e, ode_tol);
    if (cp.order_k < 2) continue;  // a regular point that sneaked through
    roots.push_back(e);
    points.push_back(std::move(cp));
  }
  std::sort(points.begin(), points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              if (a.e0.real() != b.e0.real()) return a.e0.real() < b.e0.real();
              return a.e0.imag() < b.e0.imag();
            });
  return points;
}

std::vector<double> emanating_directions(cplx delta_k, int k, Regime regime) {
  if (k < 1) throw DomainError("derivative order must be at least 1");
  if (delta_k == cplx(0.0, 0.0))
    throw DomainError("leading derivative must be nonzero");
  if (regime == Regime::OffSpectrum) return {};

  const double arg_d = std::arg(delta_k);
  std::vector<double> out;
  for (int j = 1; j <= 2 * k; ++j) {
    if (regime == Regime::EdgePlus && j % 2 == 0) continue;   // keep leading term < 0
    if (regime == Regime::EdgeMinus && j % 2 == 1) continue;  // keep leading term > 0
    double theta = (j * kPi - arg_d) / k;
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    if (theta >= kTwoPi) theta -= kTwoPi;
    out.push_back(theta);
  }
  std::sort(out.begin(), out.end());
  return out;
}

LocalShapeReport verify_local_shape(const PeriodicPotential& v,
                                    const CriticalPoint& cp,
                                    double probe_radius, double ode_tol) {
  if (!(probe_radius > 0.0)) throw DomainError("probe radius must be positive");
  constexpr int kNodes = 1024;
  const double band_tol = 1e-9;

  std::vector<double> im(kNodes), re(kNodes);
  for (int i = 0; i < kNodes; ++i) {
    double theta = kTwoPi * i / kNodes;
    DiscriminantValue dv =
        discriminant(v, cp.e0 + std::polar(probe_radius, theta), ode_tol);
    im[i] = dv.delta.imag();
    re[i] = dv.delta.real();
  }

  auto delta_at = [&](double theta) {
    return discriminant(v, cp.e0 + std::polar(probe_radius, theta), ode_tol)
        .delta;
  };

  std::vector<double> measured;
  auto push_angle = [&](double theta, double re_value) {
    if (re_value < -1.0 - band_tol || re_value > 1.0 + band_tol) return;
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    for (double existing : measured)
      if (circular_gap(existing, theta) <= 1e-6) return;
    measured.push_back(theta);
  };

  for (int i = 0; i < kNodes; ++i) {
    int j = (i + 1) % kNodes;
    double a = im[i], b = im[j];
    if (a == 0.0) {
      push_angle(kTwoPi * i / kNodes, re[i]);
      continue;
    }
    if (a * b >= 0.0) continue;
    double lo = kTwoPi * i / kNodes;
    double hi = kTwoPi * (i + 1) / kNodes;
    double flo = a;
    cplx mid_delta;
    double mid = lo;
    while (hi - lo > 1e-10) {
      mid = 0.5 * (lo + hi);
      mid_delta = delta_at(mid);
      if ((mid_delta.imag() > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = mid_delta.imag();
      } else {
        hi = mid;
      }
    }
    push_angle(mid, delta_at(mid).real());
  }
  std::sort(measured.begin(), measured.end());

  const std::vector<double>& predicted = cp.directions;
  if (static_cast<int>(measured.size()) !=
      static_cast<int>(predicted.size()))
    throw ArcCountMismatch(
        static_cast<int>(predicted.size()), static_cast<int>(measured.size()),
        "probe found " + std::to_string(measured.size()) +
            " spectrum crossings but " + std::to_string(predicted.size()) +
            " directions are predicted");

  double best = 0.0;
  const int m = static_cast<int>(measured.size());
  if (m > 0) {
    best = std::numeric_limits<double>::infinity();
    for (int shift = 0; shift < m; ++shift) {
      double worst = 0.0;
      for (int i = 0; i < m; ++i)
        worst = std::max(worst,
                         circular_gap(measured[(i + shift) % m], predicted[i]));
      best = std::min(best, worst);
    }
  }
  return LocalShapeReport{measured, predicted, best, m};
}

// ---------------------------------------------------------------------------
// Nonreal-spectrum detection: interior extrema force off-axis arcs.

namespace {

std::optional<CurvePoint> seed_off_axis(const PeriodicPotential& v, double e0,
                                        double theta, const DetectConfig& cfg) {
  double r = 1e-2 * (1.0 + std::abs(e0));
  for (int attempt = 0; attempt < 7; ++attempt, r *= 0.5) {
    cplx start = cplx(e0, 0.0) + std::polar(r, theta);
    auto corr = correct_free(v, start, 0.1 * cfg.trace_tol, cfg.ode_tol);
    if (corr && membership(corr->dv, cfg.trace_tol) &&
        std::abs(corr->e - cplx(e0, 0.0)) > 1e-5) {
      return corr;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<NonrealCertificate> detect_nonreal_from_extremum(
    const PeriodicPotential& v, double e_min, double e_max,
    const DetectConfig& cfg, std::vector<double>* indeterminate_extrema,
    std::vector<double>* interior_extrema) {
  SymmetryReport sym = check_pt_symmetry(v, cfg.pt_tol);
  if (!sym.pt_symmetric)
    throw NotPTSymmetric("nonreal-spectrum detection requires conj(V(-x)) == V(x)");

  RealScan scan =
      scan_real_line(v, e_min, e_max, cfg.scan_n, cfg.trace_tol, cfg.ode_tol);

  SpectralBound bound = bound_region(v);
  Box box = widened_box(bound, e_max + 5.0,
                        std::max(default_trace_margin(v), 1.0));

  auto dprime_at = [&](double e) {
    return discriminant(v, cplx(e, 0.0), cfg.ode_tol).delta_prime.real();
  };

  std::vector<double> refined;
  for (const auto& [lo0, hi0] : scan.extremum_candidates) {
    double lo = lo0, hi = hi0;
    double flo = dprime_at(lo);
    if (flo == 0.0) {
      refined.push_back(lo);
      continue;
    }
    for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      double fm = dprime_at(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    double e0 = 0.5 * (lo + hi);
    bool dup = false;
    for (double r : refined)
      if (std::abs(r - e0) <= 1e-9 * (1.0 + std::abs(e0))) dup = true;
    if (!dup) refined.push_back(e0);
  }

  std::vector<NonrealCertificate> certs;
  for (double e0 : refined) {
    double delta0 =
        discriminant(v, cplx(e0, 0.0), cfg.ode_tol).delta.real();
    if (std::abs(delta0 - 1.0) <= cfg.interior_margin ||
        std::abs(delta0 + 1.0) <= cfg.interior_margin) {
      if (indeterminate_extrema) indeterminate_extrema->push_back(e0);
      continue;
    }
    if (!(delta0 > -1.0 && delta0 < 1.0)) continue;

    CriticalPoint shape = local_shape_at(v, cplx(e0, 0.0), cfg.ode_tol);
    if (shape.order_k < 2) continue;
    if (interior_extrema) interior_extrema->push_back(e0);

    TraceConfig tc;
    tc.step = cfg.arc_step;
    tc.trace_tol = cfg.trace_tol;
    tc.max_points = cfg.max_arc_points;
    tc.box = box;
    tc.ode_tol = cfg.ode_tol;

    std::vector<cplx> witnesses;
    auto add_witness = [&](cplx w) {
      for (cplx existing : witnesses)
        if (std::abs(existing - w) <= 1e-9) return;
      witnesses.push_back(w);
    };

    for (double theta : shape.directions) {
      if (std::abs(std::sin(theta)) <= 0.1) continue;
      auto seed = seed_off_axis(v, e0, theta, cfg);
      if (!seed) continue;
      SpectralArc arc;
      try {
        arc = trace_arc(v, seed->e, tc);
      } catch (const Error&) {
        continue;
      }
      std::vector<cplx> qualifying;
      for (cplx p : arc.points)
        if (std::abs(p.imag()) >= cfg.witness_min_im) qualifying.push_back(p);
      if (qualifying.empty()) continue;
      std::size_t stride = std::max<std::size_t>(1, qualifying.size() / 4);
      for (std::size_t idx = 0; idx < qualifying.size(); idx += stride) {
        cplx w = qualifying[idx];
        if (in_spectrum(v, w, cfg.trace_tol, cfg.ode_tol) &&
            in_spectrum(v, std::conj(w), cfg.trace_tol, cfg.ode_tol)) {
          add_witness(w);
          add_witness(std::conj(w));
        }
      }
    }
    if (!witnesses.empty())
      certs.push_back(NonrealCertificate{e0, delta0, shape.order_k, witnesses});
  }
  return certs;
}

}  // namespace hillspec
