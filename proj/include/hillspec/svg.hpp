#pragma once

#include <string>
#include <vector>

#include "hillspec/spectrum.hpp"

namespace hillspec {

/// Discriminant graph over a real window: Re Delta solid, Im Delta dashed,
/// guide lines at +-1.
std::string render_discriminant_svg(const std::vector<double>& energies,
                                    const std::vector<cplx>& delta);

/// Complex-plane picture: spectral arcs as dark polylines over the shaded
/// containment strip, band edges marked P (Delta = +1) / AP (Delta = -1).
std::string render_spectrum_svg(const std::vector<SpectralArc>& arcs,
                                const std::vector<BandEdge>& edges,
                                const std::vector<CriticalPoint>& critical,
                                const SpectralBound& bound, const Box& box);

}  // namespace hillspec
