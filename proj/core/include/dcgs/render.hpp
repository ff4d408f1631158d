#pragma once

#include <span>
#include <vector>

#include "dcgs/core.hpp"

namespace dcgs {

/// Kernel values of one primitive over its footprint. The contribution of the
/// primitive to channel c at pixel `pixels[k]` is opacity * intensity[c] *
/// density[k].
struct PrimitiveContrib {
    GaussianId id = 0;
    std::vector<int> pixels;
    std::vector<double> density;
};

struct RenderOutput {
    Raster image;
    std::vector<PrimitiveContrib> contribs;  // same order as the set
};

/// Additive splatting: image(j) = sum_i o_i * c_i * G_i(x_j) over primitives
/// whose footprint contains j. No clamping.
RenderOutput render(const GaussianSet &set, RasterDims dims, int channels,
                    double cutoff_sigma = kDefaultCutoffSigma);

/// Same model, but with the per-primitive pixel sets supplied by the caller
/// (one footprint per primitive, in set order).
RenderOutput render_with_footprints(const GaussianSet &set, RasterDims dims, int channels,
                                    std::span<const Footprint> footprints);

struct LossResult {
    double total = 0.0;
    Raster per_pixel;  // single channel; squared error summed over channels
};

/// Sum of squared errors. Throws std::invalid_argument on shape mismatch.
LossResult loss(const Raster &image, const Raster &target);

}  // namespace dcgs
