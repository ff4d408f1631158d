#include "scene.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <string>

#include "dcgs/metrics.hpp"
#include "dcgs/optim.hpp"

namespace dcgs {

namespace {

using Engine = std::mt19937_64;

double uniform(Engine &rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Gaussian2D random_peak(Engine &rng, const PeakRanges &r) {
    Gaussian2D g;
    g.scales = {uniform(rng, r.sigma_min, r.sigma_max), uniform(rng, r.sigma_min, r.sigma_max)};
    g.theta = canonical_angle(uniform(rng, 0.0, std::numbers::pi));
    g.opacity = 1.0;
    const double amp = uniform(rng, r.amp_min, r.amp_max);
    g.intensity = {amp, amp, amp};
    return g;
}

void splat_exact(Raster &img, const Gaussian2D &g) {
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double w = g.opacity * eval_density(g, {double(x), double(y)});
            for (int c = 0; c < img.channels(); ++c) img.at(x, y, c) += g.intensity[c] * w;
        }
}

Vec2 raster_center(RasterDims d) { return {(d.width - 1) / 2.0, (d.height - 1) / 2.0}; }

Scene two_peak(const SceneSpec &spec, Engine &rng) {
    const PeakRanges &r = spec.ranges;
    Gaussian2D a = random_peak(rng, r);
    Gaussian2D b = random_peak(rng, r);
    const double max_sigma = std::max(a.max_scale(), b.max_scale());
    const double sep = r.sep_factor * max_sigma + uniform(rng, 0.0, r.sep_extra);
    const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec2 center = raster_center(spec.dims) +
                        Vec2{uniform(rng, -r.center_jitter, r.center_jitter),
                             uniform(rng, -r.center_jitter, r.center_jitter)};
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    a.mu = center - (0.5 * sep) * dir;
    b.mu = center + (0.5 * sep) * dir;
    Scene s{Raster(spec.dims.width, spec.dims.height, spec.channels), {a, b}};
    splat_exact(s.target, a);
    splat_exact(s.target, b);
    return s;
}

Scene k_peak(const SceneSpec &spec, Engine &rng) {
    const PeakRanges &r = spec.ranges;
    Scene s{Raster(spec.dims.width, spec.dims.height, spec.channels), {}};
    const double margin = r.sigma_max;
    for (int i = 0; i < spec.k; ++i) {
        Gaussian2D g = random_peak(rng, r);
        for (int attempt = 0; attempt < 1000; ++attempt) {
            g.mu = {uniform(rng, margin, spec.dims.width - 1 - margin),
                    uniform(rng, margin, spec.dims.height - 1 - margin)};
            const bool clear = std::all_of(s.peaks.begin(), s.peaks.end(), [&](const Gaussian2D &o) {
                return norm(o.mu - g.mu) >= r.sep_factor * std::max(o.max_scale(), g.max_scale());
            });
            if (clear) break;
        }
        s.peaks.push_back(g);
        splat_exact(s.target, g);
    }
    return s;
}

Scene composite(const SceneSpec &spec, Engine &rng) {
    const auto bands = composite_bands(spec.dims);
    const double phase_x = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double phase_y = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double ramp_span = std::max(1, bands.ramp_end - bands.flat_end - 1);
    Scene s{Raster(spec.dims.width, spec.dims.height, spec.channels), {}};
    for (int y = 0; y < spec.dims.height; ++y)
        for (int x = 0; x < spec.dims.width; ++x) {
            double v;
            if (x < bands.flat_end) {
                v = 0.5;
            } else if (x < bands.ramp_end) {
                v = 0.2 + 0.6 * (x - bands.flat_end) / ramp_span;
            } else {
                v = 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * x / 6.0 + phase_x) *
                              std::sin(2.0 * std::numbers::pi * y / 6.0 + phase_y);
            }
            for (int c = 0; c < spec.channels; ++c) s.target.at(x, y, c) = v;
        }
    return s;
}

Scene ramp_noise(const SceneSpec &spec, Engine &rng) {
    Scene s{Raster(spec.dims.width, spec.dims.height, spec.channels), {}};
    const int half = spec.dims.width / 2;
    for (int y = 0; y < spec.dims.height; ++y)
        for (int x = 0; x < spec.dims.width; ++x) {
            const double v = x < half ? 0.1 + 0.8 * (x + 0.5 * y) / (half + 0.5 * spec.dims.height)
                                      : uniform(rng, 0.0, 1.0);
            for (int c = 0; c < spec.channels; ++c) s.target.at(x, y, c) = v;
        }
    return s;
}

}  // namespace

std::string_view to_string(SceneKind k) {
    switch (k) {
        case SceneKind::TwoPeak: return "two_peak";
        case SceneKind::KPeak: return "k_peak";
        case SceneKind::Composite: return "composite";
        case SceneKind::RampNoise: return "ramp_noise";
    }
    return "?";
}

SceneKind parse_scene_kind(std::string_view s) {
    if (s == "two_peak") return SceneKind::TwoPeak;
    if (s == "k_peak") return SceneKind::KPeak;
    if (s == "composite") return SceneKind::Composite;
    if (s == "ramp_noise") return SceneKind::RampNoise;
    throw std::invalid_argument("unknown scene kind '" + std::string(s) +
                                "' (expected two_peak, k_peak, composite or ramp_noise)");
}

CompositeBands composite_bands(RasterDims dims) { return {dims.width / 3, (2 * dims.width) / 3}; }

Scene generate_scene(const SceneSpec &spec) {
    if (spec.dims.width <= 0 || spec.dims.height <= 0) throw std::invalid_argument("scene: dimensions must be positive");
    if (spec.kind == SceneKind::KPeak && spec.k < 1) throw std::invalid_argument("scene: k must be >= 1");
    Engine rng(spec.seed);
    switch (spec.kind) {
        case SceneKind::TwoPeak: return two_peak(spec, rng);
        case SceneKind::KPeak: return k_peak(spec, rng);
        case SceneKind::Composite: return composite(spec, rng);
        case SceneKind::RampNoise: return ramp_noise(spec, rng);
    }
    throw std::invalid_argument("scene: unknown kind");
}

GaussianSet moment_init(const Raster &target) {
    const Raster gray = to_luminance(target);
    const RasterDims dims = gray.dims();
    double mass = 0.0;
    Vec2 com;
    for (int j = 0; j < dims.pixel_count(); ++j) {
        const double w = std::max(0.0, gray.px(j));
        mass += w;
        com += w * pixel_position(dims, j);
    }
    if (!(mass > 0.0)) throw std::invalid_argument("moment_init: target has no positive mass");
    com *= 1.0 / mass;
    double sxx = 0, sxy = 0, syy = 0;
    for (int j = 0; j < dims.pixel_count(); ++j) {
        const double w = std::max(0.0, gray.px(j));
        const Vec2 d = pixel_position(dims, j) - com;
        sxx += w * d.x * d.x;
        sxy += w * d.x * d.y;
        syy += w * d.y * d.y;
    }
    sxx /= mass;
    sxy /= mass;
    syy /= mass;
    const double mid = 0.5 * (sxx + syy);
    const double rad = std::hypot(0.5 * (sxx - syy), sxy);
    const double major = std::sqrt(std::max(mid + rad, 0.25));
    const double minor = std::sqrt(std::max(mid - rad, 0.25));
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

    Gaussian2D g;
    g.mu = com;
    g.scales = {major, minor};
    g.theta = canonical_angle(theta);
    const double amplitude = mass / (2.0 * std::numbers::pi * major * minor);
    g.opacity = std::clamp(amplitude, kMinOpacity, 1.0);
    for (int c = 0; c < kMaxChannels; ++c) {
        double channel_mass = 0.0;
        for (int j = 0; j < dims.pixel_count(); ++j)
            channel_mass += std::max(0.0, target.px(j, c < target.channels() ? c : 0));
        g.intensity[c] = std::clamp(channel_mass / mass * amplitude / g.opacity, 0.0, 1.0);
    }
    GaussianSet set;
    set.add(g);
    return set;
}

GaussianSet support_init(const Raster &target, double support_frac) {
    if (!(support_frac >= 0.0 && support_frac < 1.0))
        throw std::invalid_argument("support_init: support_frac must lie in [0, 1)");
    GaussianSet set = moment_init(target);
    Gaussian2D g = set[0].g;
    const Raster gray = to_luminance(target);
    const RasterDims dims = gray.dims();
    double peak = 0.0;
    for (double v : gray.data()) peak = std::max(peak, v);
    const Vec2 e0 = g.axis_direction(0);
    const Vec2 e1 = g.axis_direction(1);
    double r0 = 0.0, r1 = 0.0;
    for (int j = 0; j < dims.pixel_count(); ++j) {
        if (gray.px(j) < support_frac * peak) continue;
        const Vec2 d = pixel_position(dims, j) - g.mu;
        r0 = std::max(r0, std::abs(dot(d, e0)));
        r1 = std::max(r1, std::abs(dot(d, e1)));
    }
    // The cutoff ellipse (3 sigma) reaches the farthest support pixel on each axis.
    g.scales = {std::max(r0 / kDefaultCutoffSigma, 0.5), std::max(r1 / kDefaultCutoffSigma, 0.5)};
    GaussianSet out;
    out.add(g);
    return out;
}

GaussianSet grid_init(const Raster &target, int nx, int ny) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid_init: cell counts must be positive");
    const double ax = static_cast<double>(target.width()) / nx;
    const double ay = static_cast<double>(target.height()) / ny;
    const double sx = 0.5 * ax;
    const double sy = 0.5 * ay;
    // A lattice of Gaussians with sigma = spacing / 2 sums to about
    // 2 pi sx sy / (ax ay) times the common amplitude.
    const double gain = (ax * ay) / (2.0 * std::numbers::pi * sx * sy);
    GaussianSet set;
    for (int cy = 0; cy < ny; ++cy)
        for (int cx = 0; cx < nx; ++cx) {
            Gaussian2D g;
            g.mu = {(cx + 0.5) * ax - 0.5, (cy + 0.5) * ay - 0.5};
            g.scales = {sx, sy};
            g.theta = 0.0;
            g.opacity = 1.0;
            const int px = std::clamp(static_cast<int>(std::lround(g.mu.x)), 0, target.width() - 1);
            const int py = std::clamp(static_cast<int>(std::lround(g.mu.y)), 0, target.height() - 1);
            for (int c = 0; c < kMaxChannels; ++c)
                g.intensity[c] = std::clamp(gain * target.at(px, py, c < target.channels() ? c : 0), 0.0, 1.0);
            set.add(g);
        }
    return set;
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace dcgs
