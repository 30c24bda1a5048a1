#include "hillspec/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hillspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx raw_eval(const PeriodicPotential& v, double xr);

double circular_distance(double a, double b, double period) {
  double d = std::abs(a - b);
  return std::min(d, period - d);
}

}  // namespace

double reduce_period(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;  // guard the r + period rounding case
  return r;
}

PeriodicPotential::PeriodicPotential(double period, Body body)
    : period_(period), body_(std::move(body)) {
  if (!(period_ > 0.0) || !std::isfinite(period_))
    throw DomainError("potential period must be positive and finite");
  if (const auto* pw = std::get_if<PiecewiseConstant>(&body_)) {
    if (pw->segments.empty())
      throw DomainError("piecewise potential needs at least one segment");
    double sum = 0.0;
    for (const auto& s : pw->segments) {
      if (!(s.length > 0.0))
        throw DomainError("piecewise segment lengths must be positive");
      sum += s.length;
    }
    if (std::abs(sum - period_) > 1e-12 * period_)
      throw DomainError("piecewise segment lengths do not sum to the period");
  } else if (const auto* dc = std::get_if<DeltaComb>(&body_)) {
    double prev = -1.0;
    for (const auto& imp : dc->impulses) {
      if (!(imp.position >= 0.0) || !(imp.position < period_))
        throw DomainError("impulse positions must lie in [0, period)");
      if (!(imp.position > prev))
        throw DomainError("impulse positions must be strictly increasing");
      prev = imp.position;
    }
  } else if (const auto* ex = std::get_if<Expression>(&body_)) {
    if (!ex->ast) throw DomainError("expression potential has no parsed body");
    // Smoke check: the body must evaluate at x = 0 and x = period/2.
    try {
      (void)expr::eval(ex->ast, 0.0);
      (void)expr::eval(ex->ast, period_ / 2.0);
    } catch (const EvalError& e) {
      throw DomainError(std::string("expression potential fails to evaluate: ") +
                        e.what());
    }
  }
}

PeriodicPotential PeriodicPotential::fourier(double period,
                                             std::vector<FourierTerm> terms) {
  return PeriodicPotential(period, FourierSeries{std::move(terms)});
}

PeriodicPotential PeriodicPotential::piecewise(double period,
                                               std::vector<Segment> segments) {
  return PeriodicPotential(period, PiecewiseConstant{std::move(segments)});
}

PeriodicPotential PeriodicPotential::delta_comb(double period, cplx background,
                                                std::vector<Impulse> impulses) {
  return PeriodicPotential(period, DeltaComb{background, std::move(impulses)});
}

PeriodicPotential PeriodicPotential::expression(double period,
                                                std::string source) {
  expr::NodePtr ast = expr::parse(source);
  return PeriodicPotential(period, Expression{std::move(source), std::move(ast)});
}

bool PeriodicPotential::exact_transfer_class() const noexcept {
  return std::holds_alternative<PiecewiseConstant>(body_) ||
         std::holds_alternative<DeltaComb>(body_);
}

namespace {

cplx raw_eval(const PeriodicPotential& v, double xr) {
  struct V {
    const PeriodicPotential& pot;
    double xr;
    cplx operator()(const FourierSeries& f) const {
      cplx sum(0.0, 0.0);
      const double base = kTwoPi / pot.period();
      for (const auto& t : f.terms)
        sum += t.coefficient * std::polar(1.0, base * t.harmonic * xr);
      return sum;
    }
    cplx operator()(const PiecewiseConstant& pw) const {
      double cum = 0.0;
      for (const auto& s : pw.segments) {
        cum += s.length;
        if (xr < cum) return s.value;
      }
      return pw.segments.back().value;  // xr == period up to rounding
    }
    cplx operator()(const DeltaComb& dc) const {
      for (const auto& imp : dc.impulses) {
        if (circular_distance(xr, imp.position, pot.period()) <=
            1e-14 * pot.period())
          throw DomainError("delta-comb potential evaluated at an impulse");
      }
      return dc.background;
    }
    cplx operator()(const Expression& ex) const {
      return expr::eval(ex.ast, xr);
    }
  };
  return std::visit(V{v, xr}, v.body());
}

}  // namespace

cplx evaluate(const PeriodicPotential& v, double x) {
  return raw_eval(v, reduce_period(x, v.period()));
}

SpectralBound bound_region(const PeriodicPotential& v, int samples,
                           double margin) {
  struct V {
    const PeriodicPotential& pot;
    int samples;
    double margin;

    SpectralBound from_values(const std::vector<cplx>& vals, bool exact) const {
      double re_min = std::numeric_limits<double>::infinity();
      double im_min = std::numeric_limits<double>::infinity();
      double im_max = -std::numeric_limits<double>::infinity();
      bool finite = true;
      for (cplx z : vals) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
          finite = false;
          continue;
        }
        re_min = std::min(re_min, z.real());
        im_min = std::min(im_min, z.imag());
        im_max = std::max(im_max, z.imag());
      }
      if (!finite)
        re_min = -std::numeric_limits<double>::infinity();
      if (!exact) {
        re_min -= margin;
        im_min -= margin;
        im_max += margin;
      }
      return SpectralBound{re_min, im_min, im_max, exact};
    }

    SpectralBound sampled() const {
      std::vector<cplx> vals;
      vals.reserve(samples);
      for (int j = 0; j < samples; ++j)
        vals.push_back(raw_eval(pot, pot.period() * j / samples));
      return from_values(vals, false);
    }

    SpectralBound operator()(const FourierSeries& f) const {
      bool constant = true;
      cplx c0(0.0, 0.0);
      for (const auto& t : f.terms) {
        if (t.harmonic == 0)
          c0 += t.coefficient;
        else if (t.coefficient != cplx(0.0, 0.0))
          constant = false;
      }
      if (constant)
        return SpectralBound{c0.real(), c0.imag(), c0.imag(), true};
      return sampled();
    }
    SpectralBound operator()(const PiecewiseConstant& pw) const {
      std::vector<cplx> vals;
      vals.reserve(pw.segments.size());
      for (const auto& s : pw.segments) vals.push_back(s.value);
      return from_values(vals, true);
    }
    SpectralBound operator()(const DeltaComb& dc) const {
      // Impulses carry no range information; only the background enters, and
      // the result is flagged inexact.
      return SpectralBound{dc.background.real(), dc.background.imag(),
                           dc.background.imag(), false};
    }
    SpectralBound operator()(const Expression&) const { return sampled(); }
  };
  return std::visit(V{v, samples, margin}, v.body());
}

SymmetryReport check_pt_symmetry(const PeriodicPotential& v, double tol,
                                 int samples) {
  if (!(tol > 0.0)) throw DomainError("symmetry tolerance must be positive");
  const double omega = v.period();

  if (const auto* pw = std::get_if<PiecewiseConstant>(&v.body())) {
    // x -> -x mod period reverses the segment order, so the symmetry holds
    // (almost everywhere) iff the reversed, conjugated segment list matches
    // the original. Pointwise grid sampling would spuriously fail at the
    // jump locations.
    const auto& segs = pw->segments;
    const std::size_t m = segs.size();
    double defect = 0.0;
    bool lengths_match = true;
    for (std::size_t i = 0; i < m; ++i) {
      const Segment& a = segs[i];
      const Segment& b = segs[m - 1 - i];
      if (std::abs(a.length - b.length) > 1e-12 * omega) {
        lengths_match = false;
        defect = std::max(defect, std::max(std::abs(a.value), 1.0));
      } else {
        defect = std::max(defect, std::abs(std::conj(b.value) - a.value));
      }
    }
    bool sym = lengths_match && defect <= tol;
    return SymmetryReport{sym, defect, static_cast<int>(m)};
  }

  if (const auto* dc = std::get_if<DeltaComb>(&v.body())) {
    double defect = std::abs(std::conj(dc->background) - dc->background);
    bool matched_all = true;
    const double pos_tol = 1e-9 * omega;
    for (const auto& imp : dc->impulses) {
      double mirror = reduce_period(-imp.position, omega);
      bool matched = false;
      for (const auto& other : dc->impulses) {
        if (circular_distance(other.position, mirror, omega) <= pos_tol) {
          defect = std::max(defect,
                            std::abs(std::conj(imp.strength) - other.strength));
          matched = true;
          break;
        }
      }
      if (!matched) {
        matched_all = false;
        defect = std::max(defect, std::max(std::abs(imp.strength), 1.0));
      }
    }
    bool sym = matched_all && defect <= tol;
    return SymmetryReport{sym, defect, static_cast<int>(dc->impulses.size()) + 1};
  }

  double defect = 0.0;
  for (int j = 0; j < samples; ++j) {
    double x = omega * j / samples;
    cplx here = raw_eval(v, x);
    cplx mirrored = raw_eval(v, reduce_period(-x, omega));
    defect = std::max(defect, std::abs(std::conj(mirrored) - here));
  }
  return SymmetryReport{defect <= tol, defect, samples};
}

}  // namespace hillspec
