#pragma once

#include <filesystem>
#include <string>

#include "hillspec/potential.hpp"

namespace hillspec {

/// Reads a potential spec file:
///   { "period": 6.283..., "type": "fourier" | "piecewise" | "delta_comb" |
///     "expression", ... }
/// Complex numbers are two-element [re, im] arrays. Malformed files throw
/// SpecError with line/offset context; missing files throw IoError.
PeriodicPotential load_potential_spec(const std::filesystem::path& path);

/// Same, from an in-memory JSON document.
PeriodicPotential potential_from_json_text(const std::string& text,
                                           const std::string& origin = "<spec>");

/// 17-significant-digit formatting used by every CLI writer; round-trips
/// 64-bit floats exactly and keeps outputs byte-reproducible.
std::string format_g17(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace hillspec
