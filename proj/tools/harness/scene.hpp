#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "dcgs/core.hpp"

namespace dcgs {

enum class SceneKind { TwoPeak, KPeak, Composite, RampNoise };

std::string_view to_string(SceneKind k);
SceneKind parse_scene_kind(std::string_view s);

/// Sampling ranges for peak scenes. A pair of peaks is separated by at
/// least sep_factor times the largest sigma of the pair.
struct PeakRanges {
    double sigma_min = 1.2;
    double sigma_max = 3.0;
    double amp_min = 0.6;
    double amp_max = 1.0;
    double sep_factor = 3.0;
    double sep_extra = 6.0;
    double center_jitter = 2.0;
};

struct SceneSpec {
    SceneKind kind = SceneKind::TwoPeak;
    RasterDims dims{32, 32};
    int channels = 1;
    int k = 2;  // peak count for KPeak
    PeakRanges ranges;
    std::uint64_t seed = 0;
};

struct Scene {
    Raster target;
    std::vector<Gaussian2D> peaks;  // generating peaks, empty for non-peak kinds
};

/// Deterministic in the spec: identical specs give bit-identical rasters.
Scene generate_scene(const SceneSpec &spec);
inline Raster gen_target(const SceneSpec &spec) { return generate_scene(spec).target; }

/// Column ranges [begin, end) of the flat, ramp and textured bands of the
/// composite scene.
struct CompositeBands {
    int flat_end = 0;
    int ramp_end = 0;
};
CompositeBands composite_bands(RasterDims dims);

/// One primitive matching the target's mass, center of mass and second
/// moments.
GaussianSet moment_init(const Raster &target);

/// An nx-by-ny lattice of isotropic primitives whose intensities follow the
/// target.
/// Moment-initialized primitive whose axes are stretched or shrunk so the
/// cutoff ellipse just reaches every pixel above support_frac * peak.
GaussianSet support_init(const Raster &target, double support_frac);

GaussianSet grid_init(const Raster &target, int nx, int ny);

/// SplitMix64 step; used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace dcgs
