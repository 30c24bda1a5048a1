// hillspec: Floquet discriminants and band spectra of complex periodic
// Schrodinger operators.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hillspec/jsonio.hpp"
#include "hillspec/oracle.hpp"
#include "hillspec/spectrum.hpp"
#include "hillspec/svg.hpp"

namespace {

using namespace hillspec;

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitVerify = 4;
constexpr int kExitIo = 5;

constexpr const char* kExitFooter =
    "Exit codes:\n"
    "  0  success\n"
    "  1  command-line usage error\n"
    "  2  spec error (malformed file or expression)\n"
    "  3  numeric failure\n"
    "  4  verification failure\n"
    "  5  I/O error\n";

std::string cx(cplx z) {
  return "[" + format_g17(z.real()) + "," + format_g17(z.imag()) + "]";
}

std::string num_or_null(double v) {
  return std::isfinite(v) ? format_g17(v) : std::string("null");
}

struct CommonOpts {
  std::string spec_path;
  std::vector<double> window;
  std::vector<double> box;
  int grid = 64;
  double ode_tol = 1e-10;
  double trace_tol = 1e-8;
  std::string out_path;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_out = true) {
  cmd->add_option("--spec", o.spec_path, "potential spec file (JSON)")
      ->required();
  cmd->add_option("--window", o.window, "real window A,B")
      ->delimiter(',')
      ->expected(2);
  cmd->add_option("--box", o.box, "complex box reA,reB,imA,imB")
      ->delimiter(',')
      ->expected(4);
  cmd->add_option("--grid", o.grid, "samples per axis");
  cmd->add_option("--ode-tol", o.ode_tol, "integrator tolerance");
  cmd->add_option("--trace-tol", o.trace_tol, "membership/tracing tolerance");
  if (needs_out) {
    cmd->add_option("--out", o.out_path, "output file")->required();
    cmd->add_option("--format", o.format, "csv | json | svg");
  }
}

const char* type_name(const PeriodicPotential& v) {
  struct V {
    const char* operator()(const FourierSeries&) const { return "fourier"; }
    const char* operator()(const PiecewiseConstant&) const { return "piecewise"; }
    const char* operator()(const DeltaComb&) const { return "delta_comb"; }
    const char* operator()(const Expression&) const { return "expression"; }
  };
  return std::visit(V{}, v.body());
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Interior: return "interior";
    case Regime::EdgePlus: return "edge+";
    case Regime::EdgeMinus: return "edge-";
    case Regime::OffSpectrum: return "off-spectrum";
  }
  return "?";
}

std::string endpoint_json(const ArcEndpoint& e) {
  std::ostringstream out;
  out << "{\"kind\":\"";
  switch (e.kind) {
    case ArcEndpoint::Kind::BandEdge:
      out << "band_edge\",\"sign\":" << e.edge_sign;
      break;
    case ArcEndpoint::Kind::CriticalPoint:
      out << "critical_point\",\"order_k\":" << e.order_k;
      break;
    case ArcEndpoint::Kind::BoxExit:
      out << "box_exit\"";
      break;
    case ArcEndpoint::Kind::StepLimit:
      out << "step_limit\"";
      break;
    case ArcEndpoint::Kind::None:
      out << "none\"";
      break;
  }
  out << ",\"location\":" << cx(e.location) << "}";
  return out.str();
}

// ---------------------------------------------------------------------------
// discriminant

int cmd_discriminant(const CommonOpts& o) {
  PeriodicPotential v = load_potential_spec(o.spec_path);
  std::ostringstream out;

  if (!o.box.empty()) {
    if (o.format == "svg")
      throw SpecError("svg output needs --window (complex grids are tabular)");
    int n = std::max(2, o.grid);
    std::vector<std::string> rows;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx e(o.box[0] + (o.box[1] - o.box[0]) * i / (n - 1),
               o.box[2] + (o.box[3] - o.box[2]) * j / (n - 1));
        DiscriminantValue dv = discriminant(v, e, o.ode_tol);
        if (o.format == "csv") {
          out << format_g17(e.real()) << "," << format_g17(e.imag()) << ","
              << format_g17(dv.delta.real()) << ","
              << format_g17(dv.delta.imag()) << ","
              << format_g17(dv.delta_prime.real()) << ","
              << format_g17(dv.delta_prime.imag()) << "\n";
        } else {
          rows.push_back("{\"e\":" + cx(e) + ",\"delta\":" + cx(dv.delta) +
                         ",\"delta_prime\":" + cx(dv.delta_prime) + "}");
        }
      }
    if (o.format == "csv") {
      std::string body = out.str();
      out.str("re_e,im_e,re_delta,im_delta,re_delta_prime,im_delta_prime\n");
      out << body;
    } else if (o.format == "json") {
      out.str("");
      out << "{\"schema\":\"hillspec/1\",\"command\":\"discriminant\","
          << "\"period\":" << format_g17(v.period()) << ",\"type\":\""
          << type_name(v) << "\",\"samples\":[";
      for (std::size_t i = 0; i < rows.size(); ++i)
        out << (i ? "," : "") << rows[i];
      out << "]}\n";
    } else {
      throw SpecError("unknown format \"" + o.format + "\"");
    }
    write_text_file(o.out_path, out.str());
    return kExitOk;
  }

  if (o.window.size() != 2 || !(o.window[0] < o.window[1]))
    throw SpecError("discriminant needs --window A,B (A < B) or --box");
  int n = std::max(2, o.grid);
  std::vector<double> energies;
  std::vector<cplx> deltas, dprimes;
  for (int i = 0; i < n; ++i) {
    double e = o.window[0] + (o.window[1] - o.window[0]) * i / (n - 1);
    DiscriminantValue dv = discriminant(v, cplx(e, 0.0), o.ode_tol);
    energies.push_back(e);
    deltas.push_back(dv.delta);
    dprimes.push_back(dv.delta_prime);
  }

  if (o.format == "csv") {
    out << "e,re_delta,im_delta,re_delta_prime,im_delta_prime\n";
    for (int i = 0; i < n; ++i)
      out << format_g17(energies[i]) << "," << format_g17(deltas[i].real())
          << "," << format_g17(deltas[i].imag()) << ","
          << format_g17(dprimes[i].real()) << ","
          << format_g17(dprimes[i].imag()) << "\n";
  } else if (o.format == "json") {
    out << "{\"schema\":\"hillspec/1\",\"command\":\"discriminant\","
        << "\"period\":" << format_g17(v.period()) << ",\"type\":\""
        << type_name(v) << "\",\"samples\":[";
    for (int i = 0; i < n; ++i) {
      out << (i ? "," : "") << "{\"e\":" << format_g17(energies[i])
          << ",\"delta\":" << cx(deltas[i])
          << ",\"delta_prime\":" << cx(dprimes[i]) << "}";
    }
    out << "]}\n";
  } else if (o.format == "svg") {
    out << render_discriminant_svg(energies, deltas);
  } else {
    throw SpecError("unknown format \"" + o.format + "\"");
  }
  write_text_file(o.out_path, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// spectrum

int cmd_spectrum(const CommonOpts& o) {
  PeriodicPotential v = load_potential_spec(o.spec_path);
  Box box;
  if (o.box.size() == 4) {
    box = Box{o.box[0], o.box[1], o.box[2], o.box[3]};
  } else if (o.window.size() == 2) {
    SpectralBound b = bound_region(v);
    box = widened_box(b, o.window[1], default_trace_margin(v));
    box.re_min = std::min(box.re_min, o.window[0]);
  } else {
    throw SpecError("spectrum needs --box reA,reB,imA,imB or --window A,B");
  }
  if (!(box.re_min < box.re_max) || !(box.im_min < box.im_max))
    throw SpecError("spectrum box is empty");

  int grid = std::max(4, o.grid);
  SpectralBound bound = bound_region(v);
  RealScan scan = scan_real_line(v, box.re_min, box.re_max,
                                 std::max(2, 4 * grid), o.trace_tol, o.ode_tol);
  std::vector<BandEdge> edges = find_band_edges(v, box, grid, o.ode_tol);
  std::vector<CriticalPoint> critical =
      find_critical_points(v, box, grid, o.ode_tol);

  TraceConfig tc;
  tc.trace_tol = o.trace_tol;
  tc.ode_tol = o.ode_tol;
  tc.box = box;
  tc.step = std::min(0.05, (box.re_max - box.re_min) / 200.0);

  std::vector<SpectralArc> arcs;
  auto near_existing = [&](cplx seed) {
    for (const auto& arc : arcs)
      for (cplx p : arc.points)
        if (std::abs(p - seed) <= tc.step) return true;
    return false;
  };
  auto try_trace = [&](cplx approx) {
    std::optional<cplx> seed =
        project_to_spectrum(v, approx, o.trace_tol, o.ode_tol);
    if (!seed || !box.contains(*seed) || near_existing(*seed)) return;
    try {
      arcs.push_back(trace_arc(v, *seed, tc));
    } catch (const SeedNotOnSpectrum&) {
    } catch (const CorrectorDiverged&) {
    } catch (const DomainError&) {
    }
  };
  for (const auto& band : scan.bands)
    try_trace(cplx(0.5 * (band.lo + band.hi), 0.0));
  for (const auto& cp : critical) {
    for (double theta : cp.directions) {
      double r = std::max(4.0 * tc.step, 1e-2 * (1.0 + std::abs(cp.e0)));
      try_trace(cp.e0 + std::polar(r, theta));
    }
  }

  std::vector<NonrealCertificate> certs;
  std::vector<double> indeterminate;
  if (check_pt_symmetry(v, 1e-8).pt_symmetric) {
    DetectConfig dc;
    dc.trace_tol = o.trace_tol;
    dc.ode_tol = o.ode_tol;
    try {
      certs = detect_nonreal_from_extremum(v, box.re_min, box.re_max, dc,
                                           &indeterminate);
    } catch (const OrderUndetermined&) {
    }
  }

  std::ostringstream out;
  if (o.format == "json") {
    out << "{\"schema\":\"hillspec/1\",\"command\":\"spectrum\","
        << "\"period\":" << format_g17(v.period()) << ",\"type\":\""
        << type_name(v) << "\"";
    out << ",\"bound\":{\"re_min\":" << num_or_null(bound.re_min)
        << ",\"im_min\":" << format_g17(bound.im_min)
        << ",\"im_max\":" << format_g17(bound.im_max)
        << ",\"exact\":" << (bound.exact ? "true" : "false") << "}";
    out << ",\"box\":[" << format_g17(box.re_min) << ","
        << format_g17(box.re_max) << "," << format_g17(box.im_min) << ","
        << format_g17(box.im_max) << "]";
    out << ",\"bands\":[";
    for (std::size_t i = 0; i < scan.bands.size(); ++i)
      out << (i ? "," : "") << "[" << format_g17(scan.bands[i].lo) << ","
          << format_g17(scan.bands[i].hi) << "]";
    out << "],\"band_edges\":[";
    for (std::size_t i = 0; i < edges.size(); ++i) {
      out << (i ? "," : "") << "{\"energy\":" << cx(edges[i].energy)
          << ",\"sign\":" << edges[i].sign << ",\"label\":\""
          << (edges[i].sign > 0 ? "P" : "AP") << "\",\"simple\":"
          << (edges[i].simple ? "true" : "false") << "}";
    }
    out << "],\"critical_points\":[";
    for (std::size_t i = 0; i < critical.size(); ++i) {
      const auto& cp = critical[i];
      out << (i ? "," : "") << "{\"e0\":" << cx(cp.e0)
          << ",\"order_k\":" << cp.order_k << ",\"delta\":" << cx(cp.delta_at)
          << ",\"regime\":\"" << regime_name(cp.regime) << "\",\"directions\":[";
      for (std::size_t d = 0; d < cp.directions.size(); ++d)
        out << (d ? "," : "") << format_g17(cp.directions[d]);
      out << "]}";
    }
    out << "],\"arcs\":[";
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const auto& arc = arcs[i];
      out << (i ? "," : "") << "{\"start\":" << endpoint_json(arc.start_kind)
          << ",\"end\":" << endpoint_json(arc.end_kind) << ",\"points\":[";
      for (std::size_t p = 0; p < arc.points.size(); ++p)
        out << (p ? "," : "") << cx(arc.points[p]);
      out << "],\"re_delta\":[";
      for (std::size_t p = 0; p < arc.delta_values.size(); ++p)
        out << (p ? "," : "") << format_g17(arc.delta_values[p]);
      out << "]}";
    }
    out << "],\"certificates\":[";
    for (std::size_t i = 0; i < certs.size(); ++i) {
      const auto& c = certs[i];
      out << (i ? "," : "") << "{\"extremum_e0\":" << format_g17(c.extremum_e0)
          << ",\"delta_at\":" << format_g17(c.delta_at)
          << ",\"order_k\":" << c.order_k << ",\"witnesses\":[";
      for (std::size_t w = 0; w < c.witness_points.size(); ++w)
        out << (w ? "," : "") << cx(c.witness_points[w]);
      out << "]}";
    }
    out << "],\"indeterminate_extrema\":[";
    for (std::size_t i = 0; i < indeterminate.size(); ++i)
      out << (i ? "," : "") << format_g17(indeterminate[i]);
    out << "]}\n";
  } else if (o.format == "csv") {
    out << "arc,point,re_e,im_e,re_delta\n";
    for (std::size_t i = 0; i < arcs.size(); ++i)
      for (std::size_t p = 0; p < arcs[i].points.size(); ++p)
        out << i << "," << p << "," << format_g17(arcs[i].points[p].real())
            << "," << format_g17(arcs[i].points[p].imag()) << ","
            << format_g17(arcs[i].delta_values[p]) << "\n";
  } else if (o.format == "svg") {
    out << render_spectrum_svg(arcs, edges, critical, bound, box);
  } else {
    throw SpecError("unknown format \"" + o.format + "\"");
  }
  write_text_file(o.out_path, out.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const CommonOpts& o, double angle_tol) {
  PeriodicPotential v = load_potential_spec(o.spec_path);
  if (o.box.size() != 4) throw SpecError("verify needs --box reA,reB,imA,imB");
  Box box{o.box[0], o.box[1], o.box[2], o.box[3]};
  int grid = std::max(4, o.grid);

  std::vector<CriticalPoint> critical =
      find_critical_points(v, box, grid, o.ode_tol);
  std::cout << "critical points found: " << critical.size() << "\n";

  bool ok = true;
  for (const auto& cp : critical) {
    std::cout << "E0 = " << format_g17(cp.e0.real()) << " + "
              << format_g17(cp.e0.imag()) << "i  k = " << cp.order_k
              << "  regime = " << regime_name(cp.regime) << "\n  predicted:";
    for (double d : cp.directions) std::cout << " " << format_g17(d);
    std::cout << "\n";
    try {
      LocalShapeReport rep =
          verify_local_shape(v, cp, adaptive_probe_radius(cp), o.ode_tol);
      std::cout << "  measured:";
      for (double d : rep.measured_angles) std::cout << " " << format_g17(d);
      std::cout << "\n  arcs = " << rep.arcs_found
                << "  max angle error = " << format_g17(rep.max_angle_error)
                << "\n";
      if (rep.max_angle_error > angle_tol) {
        std::cout << "  FAIL: angle error above " << format_g17(angle_tol)
                  << "\n";
        ok = false;
      }
    } catch (const ArcCountMismatch& e) {
      std::cout << "  FAIL: " << e.what() << "\n";
      ok = false;
    }
  }
  std::cout << (ok ? "verification passed" : "verification FAILED") << "\n";
  return ok ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// scan-family

std::string substitute_amplitude(const std::string& source, double value) {
  std::string out;
  std::size_t i = 0;
  while (i < source.size()) {
    char c = source[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < source.size() &&
             (std::isalnum(static_cast<unsigned char>(source[j])) ||
              source[j] == '_'))
        ++j;
      std::string word = source.substr(i, j - i);
      if (word == "A")
        out += "(" + format_g17(value) + ")";
      else
        out += word;
      i = j;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

int cmd_scan_family(const CommonOpts& o, double a_min, double a_max,
                    int a_steps) {
  std::string text = read_text_file(o.spec_path);
  if (o.window.size() != 2 || !(o.window[0] < o.window[1]))
    throw SpecError("scan-family needs --window A,B for the extremum search");
  if (a_steps < 1 || !(a_min <= a_max))
    throw SpecError("scan-family needs a nonempty amplitude range");

  // Pull period/source out without parsing the expression (it contains "A").
  double period;
  std::string source;
  {
    auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("period") ||
        !doc.contains("type") || doc["type"] != "expression" ||
        !doc.contains("source"))
      throw SpecError(
          "scan-family needs an expression spec with an \"A\" parameter");
    period = doc["period"].get<double>();
    source = doc["source"].get<std::string>();
  }

  struct Row {
    double a;
    int extrema;
    int indeterminate;
    int certificates;
    int witnesses;
  };
  std::vector<Row> rows;
  for (int s = 0; s < a_steps; ++s) {
    double a = a_steps == 1
                   ? a_min
                   : a_min + (a_max - a_min) * s / (a_steps - 1);
    PeriodicPotential v =
        PeriodicPotential::expression(period, substitute_amplitude(source, a));
    DetectConfig dc;
    dc.trace_tol = o.trace_tol;
    dc.ode_tol = o.ode_tol;
    std::vector<double> indet;
    std::vector<NonrealCertificate> certs;
    try {
      certs = detect_nonreal_from_extremum(v, o.window[0], o.window[1], dc,
                                           &indet);
    } catch (const OrderUndetermined&) {
    }
    int witnesses = 0;
    for (const auto& c : certs)
      witnesses += static_cast<int>(c.witness_points.size());
    rows.push_back(Row{a, static_cast<int>(certs.size() + indet.size()),
                       static_cast<int>(indet.size()),
                       static_cast<int>(certs.size()), witnesses});
  }

  std::ostringstream out;
  if (o.format == "json") {
    out << "{\"schema\":\"hillspec/1\",\"command\":\"scan-family\",\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      out << (i ? "," : "") << "{\"amplitude\":" << format_g17(r.a)
          << ",\"extrema\":" << r.extrema
          << ",\"indeterminate\":" << r.indeterminate
          << ",\"certificates\":" << r.certificates
          << ",\"witnesses\":" << r.witnesses << "}";
    }
    out << "]}\n";
  } else if (o.format == "csv") {
    out << "amplitude,extrema,indeterminate,certificates,witnesses\n";
    for (const Row& r : rows)
      out << format_g17(r.a) << "," << r.extrema << "," << r.indeterminate
          << "," << r.certificates << "," << r.witnesses << "\n";
  } else {
    throw SpecError("scan-family supports csv or json output");
  }
  write_text_file(o.out_path, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hillspec: Floquet discriminants and band spectra of complex periodic "
      "Schrodinger operators"};
  app.footer(kExitFooter);
  app.require_subcommand(1);

  CommonOpts disc_opts, spec_opts, verify_opts, family_opts;
  double angle_tol = 1e-2;
  double a_min = 0.5, a_max = 10.0;
  int a_steps = 40;

  CLI::App* disc = app.add_subcommand(
      "discriminant", "tabulate Delta(E) over a window or complex grid");
  add_common(disc, disc_opts);

  CLI::App* spec = app.add_subcommand(
      "spectrum", "scan, locate edges/critical points, and trace arcs");
  add_common(spec, spec_opts);

  CLI::App* verify = app.add_subcommand(
      "verify", "check measured local shape against predicted angles");
  add_common(verify, verify_opts, /*needs_out=*/false);
  verify->add_option("--angle-tol", angle_tol, "max angle error (radians)");

  CLI::App* family = app.add_subcommand(
      "scan-family", "sweep amplitude A in an expression spec");
  add_common(family, family_opts);
  family->add_option("--a-min", a_min, "amplitude sweep start");
  family->add_option("--a-max", a_max, "amplitude sweep end");
  family->add_option("--a-steps", a_steps, "amplitude sweep samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);  // prints help or the usage message
    return rc == 0 ? 0 : 1;
  }

  try {
    if (disc->parsed()) return cmd_discriminant(disc_opts);
    if (spec->parsed()) return cmd_spectrum(spec_opts);
    if (verify->parsed()) return cmd_verify(verify_opts, angle_tol);
    if (family->parsed())
      return cmd_scan_family(family_opts, a_min, a_max, a_steps);
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const ParseError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return kExitSpec;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ArcCountMismatch& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    return kExitVerify;
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
