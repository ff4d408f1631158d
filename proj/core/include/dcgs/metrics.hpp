#pragma once

#include <cstdint>
#include <vector>

#include "dcgs/core.hpp"

namespace dcgs {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) after clamping both images to [0, 1]; capped at
/// kPsnrCap.
double psnr(const Raster &a, const Raster &b);

struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    int window = 11;
    double sigma = 1.5;
};

/// Mean SSIM over every fully-contained window position with a Gaussian
/// weighting window, averaged over channels. Both inputs are clamped to
/// [0, 1]. Rasters smaller than the window use one unweighted global
/// window.
double ssim(const Raster &a, const Raster &b, const SsimParams &params = {});

/// Rec. 601 luma for 3-channel input; copies single-channel input.
Raster to_luminance(const Raster &image);

inline constexpr double kDcMapMasked = -1.0;

/// Local directional consistency of the image gradient field.
struct DcMap {
    RasterDims dims;
    std::vector<double> kappa;  // kDcMapMasked where mask is set
    std::vector<std::uint8_t> mask;

    double at(int x, int y) const { return kappa[static_cast<std::size_t>(y) * dims.width + x]; }
    bool masked(int x, int y) const { return mask[static_cast<std::size_t>(y) * dims.width + x] != 0; }
};

struct DcMapParams {
    int window_radius = 7;
    double mag_floor = 1e-3;
    int min_samples = 4;
};

/// For every pixel: take the finite-difference gradients inside the
/// (2r+1)^2 window, drop those weaker than mag_floor, and report the norm of
/// the circular mean of the rest. Pixels with fewer than min_samples
/// surviving gradients are masked.
DcMap dc_map(const Raster &image, const DcMapParams &params = {});

/// Central differences inside the raster, one-sided at the border.
std::vector<Vec2> image_gradients(const Raster &gray);

}  // namespace dcgs
