#include "hillspec/jsonio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hillspec {

namespace {

using nlohmann::json;

[[noreturn]] void spec_fail(const std::string& origin, const std::string& what) {
  throw SpecError(origin + ": " + what);
}

cplx read_complex(const json& j, const std::string& origin, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    spec_fail(origin, std::string(field) + " must be a two-element [re, im] array");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

std::pair<int, int> line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

PeriodicPotential potential_from_json_text(const std::string& text,
                                           const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw SpecError(origin + ": parse error at line " + std::to_string(line) +
                    ", column " + std::to_string(col) + " (byte offset " +
                    std::to_string(e.byte) + "): " + e.what());
  }

  if (!doc.is_object()) spec_fail(origin, "top level must be an object");
  if (!doc.contains("period") || !doc["period"].is_number())
    spec_fail(origin, "missing numeric \"period\"");
  double period = doc["period"].get<double>();
  if (!doc.contains("type") || !doc["type"].is_string())
    spec_fail(origin, "missing string \"type\"");
  std::string type = doc["type"].get<std::string>();

  try {
    if (type == "fourier") {
      if (!doc.contains("coefficients") || !doc["coefficients"].is_array())
        spec_fail(origin, "fourier spec needs a \"coefficients\" array");
      std::vector<FourierTerm> terms;
      for (const auto& entry : doc["coefficients"]) {
        if (!entry.is_array() || entry.size() != 2 ||
            !entry[0].is_number_integer())
          spec_fail(origin,
                    "each coefficient must be [harmonic, [re, im]]");
        terms.push_back(FourierTerm{entry[0].get<int>(),
                                    read_complex(entry[1], origin, "coefficient")});
      }
      return PeriodicPotential::fourier(period, std::move(terms));
    }
    if (type == "piecewise") {
      if (!doc.contains("segments") || !doc["segments"].is_array())
        spec_fail(origin, "piecewise spec needs a \"segments\" array");
      std::vector<Segment> segments;
      for (const auto& entry : doc["segments"]) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number())
          spec_fail(origin, "each segment must be [length, [re, im]]");
        segments.push_back(Segment{entry[0].get<double>(),
                                   read_complex(entry[1], origin, "segment value")});
      }
      return PeriodicPotential::piecewise(period, std::move(segments));
    }
    if (type == "delta_comb") {
      if (!doc.contains("background"))
        spec_fail(origin, "delta_comb spec needs \"background\"");
      cplx background = read_complex(doc["background"], origin, "background");
      std::vector<Impulse> impulses;
      if (doc.contains("impulses")) {
        if (!doc["impulses"].is_array())
          spec_fail(origin, "\"impulses\" must be an array");
        for (const auto& entry : doc["impulses"]) {
          if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number())
            spec_fail(origin, "each impulse must be [position, [re, im]]");
          impulses.push_back(Impulse{entry[0].get<double>(),
                                     read_complex(entry[1], origin, "strength")});
        }
      }
      return PeriodicPotential::delta_comb(period, background,
                                           std::move(impulses));
    }
    if (type == "expression") {
      if (!doc.contains("source") || !doc["source"].is_string())
        spec_fail(origin, "expression spec needs a string \"source\"");
      return PeriodicPotential::expression(period,
                                           doc["source"].get<std::string>());
    }
  } catch (const SpecError&) {
    throw;
  } catch (const ParseError& e) {
    throw SpecError(origin + ": expression error at offset " +
                    std::to_string(e.offset) + ": " + e.what());
  } catch (const DomainError& e) {
    throw SpecError(origin + ": " + e.what());
  }
  spec_fail(origin, "unknown potential type \"" + type + "\"");
}

PeriodicPotential load_potential_spec(const std::filesystem::path& path) {
  return potential_from_json_text(read_text_file(path), path.string());
}

}  // namespace hillspec
