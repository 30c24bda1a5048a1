#include "hillspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hillspec {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 560.0;
constexpr double kPad = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;  // data ranges
  double px(double x) const {
    return kPad + (x - x0) / (x1 - x0) * (kWidth - 2 * kPad);
  }
  double py(double y) const {
    return kHeight - kPad - (y - y0) / (y1 - y0) * (kHeight - 2 * kPad);
  }
};

void open_svg(std::ostringstream& out) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& out, const Frame& f, const char* xlabel,
          const char* ylabel) {
  out << "<line x1=\"" << num(kPad) << "\" y1=\"" << num(kHeight - kPad)
      << "\" x2=\"" << num(kWidth - kPad) << "\" y2=\"" << num(kHeight - kPad)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kPad) << "\" y1=\"" << num(kPad) << "\" x2=\""
      << num(kPad) << "\" y2=\"" << num(kHeight - kPad)
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" font-size=\"14\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << num(kHeight / 2)
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kHeight / 2) << ")\">" << ylabel << "</text>\n";
  for (double t : {f.x0, 0.5 * (f.x0 + f.x1), f.x1}) {
    out << "<text x=\"" << num(f.px(t)) << "\" y=\"" << num(kHeight - kPad + 18)
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(t)
        << "</text>\n";
  }
  for (double t : {f.y0, 0.5 * (f.y0 + f.y1), f.y1}) {
    out << "<text x=\"" << num(kPad - 6) << "\" y=\"" << num(f.py(t) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
}

void polyline(std::ostringstream& out, const Frame& f,
              const std::vector<std::pair<double, double>>& pts,
              const char* stroke, double width, const char* dash = nullptr) {
  if (pts.size() < 2) return;
  out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
      << width << "\"";
  if (dash) out << " stroke-dasharray=\"" << dash << "\"";
  out << " points=\"";
  for (const auto& [x, y] : pts) out << num(f.px(x)) << "," << num(f.py(y)) << " ";
  out << "\"/>\n";
}

}  // namespace

std::string render_discriminant_svg(const std::vector<double>& energies,
                                    const std::vector<cplx>& delta) {
  double ymin = -1.5, ymax = 1.5;
  for (cplx d : delta) {
    ymin = std::min({ymin, d.real(), d.imag()});
    ymax = std::max({ymax, d.real(), d.imag()});
  }
  // clamp the vertical range so band structure stays visible
  ymin = std::max(ymin, -6.0);
  ymax = std::min(ymax, 6.0);
  Frame f{energies.front(), energies.back(), ymin, ymax};

  std::ostringstream out;
  open_svg(out);
  axes(out, f, "Re E", "discriminant");
  for (double guide : {1.0, -1.0}) {
    out << "<line x1=\"" << num(f.px(f.x0)) << "\" y1=\"" << num(f.py(guide))
        << "\" x2=\"" << num(f.px(f.x1)) << "\" y2=\"" << num(f.py(guide))
        << "\" stroke=\"#888888\" stroke-dasharray=\"6,4\"/>\n";
  }
  std::vector<std::pair<double, double>> re_pts, im_pts;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    double re = std::clamp(delta[i].real(), ymin, ymax);
    double im = std::clamp(delta[i].imag(), ymin, ymax);
    re_pts.emplace_back(energies[i], re);
    im_pts.emplace_back(energies[i], im);
  }
  polyline(out, f, re_pts, "#1a1a1a", 1.6);
  polyline(out, f, im_pts, "#b03030", 1.2, "4,3");
  out << "<text x=\"" << num(kWidth - kPad) << "\" y=\"" << num(kPad - 8)
      << "\" font-size=\"12\" text-anchor=\"end\">Re (solid), Im (dashed), "
         "guides at +1/-1</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string render_spectrum_svg(const std::vector<SpectralArc>& arcs,
                                const std::vector<BandEdge>& edges,
                                const std::vector<CriticalPoint>& critical,
                                const SpectralBound& bound, const Box& box) {
  Frame f{box.re_min, box.re_max, box.im_min, box.im_max};
  std::ostringstream out;
  open_svg(out);

  // Containment strip: Re E >= re_min, im_min <= Im E <= im_max.
  double sx0 = std::isfinite(bound.re_min)
                   ? std::clamp(bound.re_min, box.re_min, box.re_max)
                   : box.re_min;
  double sy0 = std::clamp(bound.im_min, box.im_min, box.im_max);
  double sy1 = std::clamp(bound.im_max, box.im_min, box.im_max);
  out << "<rect x=\"" << num(f.px(sx0)) << "\" y=\"" << num(f.py(sy1))
      << "\" width=\"" << num(f.px(box.re_max) - f.px(sx0)) << "\" height=\""
      << num(std::max(f.py(sy0) - f.py(sy1), 2.0))
      << "\" fill=\"#dce6f2\" stroke=\"none\"/>\n";

  axes(out, f, "Re E", "Im E");

  for (const auto& arc : arcs) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(arc.points.size());
    for (cplx p : arc.points) pts.emplace_back(p.real(), p.imag());
    polyline(out, f, pts, "#101010", 2.2);
  }
  for (const auto& edge : edges) {
    double x = f.px(edge.energy.real()), y = f.py(edge.energy.imag());
    out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y)
        << "\" r=\"4\" fill=\"" << (edge.sign > 0 ? "#2060c0" : "#c05020")
        << "\"/>\n";
    out << "<text x=\"" << num(x + 6) << "\" y=\"" << num(y - 6)
        << "\" font-size=\"11\">" << (edge.sign > 0 ? "P" : "AP")
        << "</text>\n";
  }
  for (const auto& cp : critical) {
    double x = f.px(cp.e0.real()), y = f.py(cp.e0.imag());
    out << "<rect x=\"" << num(x - 3) << "\" y=\"" << num(y - 3)
        << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\"#208040\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hillspec
