#include "dcgs/core.hpp"

#include <algorithm>
#include <string>

namespace dcgs {

double canonical_angle(double theta) {
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0) t += std::numbers::pi;
    // fmod of a tiny negative value can round up to exactly pi.
    if (t >= std::numbers::pi) t = 0.0;
    return t;
}

Gaussian2D Gaussian2D::make(Vec2 mu, Vec2 scales, double theta, Color intensity, double opacity) {
    Gaussian2D g{mu, scales, canonical_angle(theta), intensity, opacity};
    g.validate();
    return g;
}

void Gaussian2D::validate() const {
    if (!(scales.x > 0.0) || !(scales.y > 0.0) || !std::isfinite(scales.x) || !std::isfinite(scales.y))
        throw std::invalid_argument("Gaussian2D: scales must be finite and strictly positive");
    if (!(opacity > 0.0) || opacity > 1.0)
        throw std::invalid_argument("Gaussian2D: opacity must lie in (0, 1], got " + std::to_string(opacity));
    if (!(theta >= 0.0) || !(theta < std::numbers::pi))
        throw std::invalid_argument("Gaussian2D: theta must be canonicalized to [0, pi)");
    if (!std::isfinite(mu.x) || !std::isfinite(mu.y))
        throw std::invalid_argument("Gaussian2D: center must be finite");
    for (double c : intensity)
        if (!std::isfinite(c)) throw std::invalid_argument("Gaussian2D: intensity must be finite");
}

Vec2 Gaussian2D::axis_direction(int axis) const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return axis == 0 ? Vec2{c, s} : Vec2{-s, c};
}

double mahalanobis_sq(const Gaussian2D &g, Vec2 x) {
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    const double dx = x.x - g.mu.x;
    const double dy = x.y - g.mu.y;
    const double u = (c * dx + s * dy) / g.scales.x;
    const double v = (-s * dx + c * dy) / g.scales.y;
    return u * u + v * v;
}

double eval_density(const Gaussian2D &g, Vec2 x) { return std::exp(-0.5 * mahalanobis_sq(g, x)); }

GaussianId GaussianSet::add(const Gaussian2D &g) {
    const GaussianId id = next_id_++;
    items_.push_back({id, g});
    return id;
}

std::ptrdiff_t GaussianSet::find(GaussianId id) const {
    for (std::size_t i = 0; i < items_.size(); ++i)
        if (items_[i].id == id) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

void GaussianSet::assign(std::vector<Primitive> items) {
    for (const auto &p : items) next_id_ = std::max(next_id_, p.id + 1);
    items_ = std::move(items);
}

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("Raster: dimensions must be positive");
    if (channels != 1 && channels != 3) throw std::invalid_argument("Raster: channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

bool Raster::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Footprint footprint(const Gaussian2D &g, RasterDims dims, double cutoff_sigma) {
    if (dims.width <= 0 || dims.height <= 0) throw std::invalid_argument("footprint: dimensions must be positive");
    Footprint fp;
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    const double sx2 = g.scales.x * g.scales.x;
    const double sy2 = g.scales.y * g.scales.y;
    // Axis-aligned half extents of the cutoff ellipse, padded by a pixel so
    // the exact predicate below is the only thing deciding membership.
    const double ex = cutoff_sigma * std::sqrt(c * c * sx2 + s * s * sy2) + 1.0;
    const double ey = cutoff_sigma * std::sqrt(s * s * sx2 + c * c * sy2) + 1.0;
    const double lo_x = std::max(0.0, std::ceil(g.mu.x - ex));
    const double hi_x = std::min(dims.width - 1.0, std::floor(g.mu.x + ex));
    const double lo_y = std::max(0.0, std::ceil(g.mu.y - ey));
    const double hi_y = std::min(dims.height - 1.0, std::floor(g.mu.y + ey));
    if (lo_x > hi_x || lo_y > hi_y) return fp;

    const double limit = cutoff_sigma * cutoff_sigma;
    for (int y = static_cast<int>(lo_y); y <= static_cast<int>(hi_y); ++y) {
        for (int x = static_cast<int>(lo_x); x <= static_cast<int>(hi_x); ++x) {
            if (mahalanobis_sq(g, {static_cast<double>(x), static_cast<double>(y)}) <= limit)
                fp.pixels.push_back(y * dims.width + x);
        }
    }
    return fp;
}

}  // namespace dcgs
