#pragma once

#include <vector>

#include "dcgs/core.hpp"
#include "dcgs/render.hpp"

namespace dcgs {

/// Gradient of the per-pixel loss at one footprint pixel with respect to the
/// primitive's center.
struct PixelGrad {
    int pixel = 0;
    Vec2 position;
    Vec2 g;
};

/// Dense parameter gradients of the total loss for one primitive.
struct ParamGrad {
    Vec2 mu;
    Vec2 scales;
    double theta = 0.0;
    Color intensity{0.0, 0.0, 0.0};
    double opacity = 0.0;
};

struct PrimitiveGrads {
    GaussianId id = 0;
    std::vector<PixelGrad> pixels;  // footprint order
    ParamGrad dense;

    bool visible() const { return !pixels.empty(); }
};

/// Per-primitive gradients in set order. For every entry, `dense.mu` is the
/// in-order sum of the per-pixel gradients.
struct GradBuffer {
    std::vector<PrimitiveGrads> entries;
};

/// Analytic gradients of the squared-error loss under the additive model.
GradBuffer positional_gradients(const RenderOutput &out, const Raster &target, const GaussianSet &set);

enum class ParamGroup { Mu, Scales, Theta, Intensity, Opacity };

struct ParamSelector {
    std::size_t primitive = 0;  // position in the set
    ParamGroup group = ParamGroup::Mu;
    int component = 0;  // 0/1 for vector groups, channel for intensity
};

/// Reads/writes the selected scalar parameter.
double get_param(const Gaussian2D &g, ParamGroup group, int component);
void set_param(Gaussian2D &g, ParamGroup group, int component, double value);

/// Picks the matching entry out of a dense gradient.
double get_grad(const ParamGrad &d, ParamGroup group, int component);

/// Central-difference estimate of dL/dparam. Footprints are frozen at the
/// unperturbed configuration so the estimate differentiates the same
/// truncated model the analytic pass does.
double fd_oracle(const GaussianSet &set, const Raster &target, ParamSelector sel, double h,
                 double cutoff_sigma = kDefaultCutoffSigma);

}  // namespace dcgs
