#pragma once

/// Domain types shared by every stage of the fitting pipeline.
///
/// The model lives directly in image space: a primitive's center is already
/// the projected center, so there is no camera or projection step anywhere in
/// the library. Pixel j at column x, row y sits at the integer coordinate
/// (x, y) and has linear index y * width + x.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace dcgs {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 &operator+=(Vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2 &operator-=(Vec2 o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    constexpr Vec2 &operator*=(double s) {
        x *= s;
        y *= s;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr Vec2 abs_components(Vec2 a) { return {a.x < 0 ? -a.x : a.x, a.y < 0 ? -a.y : a.y}; }

/// Rotates `v` counter-clockwise by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Maps any angle onto [0, pi). A 2D Gaussian is symmetric under rotation by
/// pi, so this loses nothing.
double canonical_angle(double theta);

inline constexpr int kMaxChannels = 3;
using Color = std::array<double, kMaxChannels>;

/// Default influence cutoff, in Mahalanobis units (3 sigma).
inline constexpr double kDefaultCutoffSigma = 3.0;

/// One anisotropic primitive. `scales` are per-axis standard deviations in
/// pixels, expressed in the frame rotated by `theta`. For single-channel
/// rasters only `intensity[0]` is used.
struct Gaussian2D {
    Vec2 mu;
    Vec2 scales{1.0, 1.0};
    double theta = 0.0;
    Color intensity{1.0, 1.0, 1.0};
    double opacity = 1.0;

    /// Validating constructor; canonicalizes theta.
    static Gaussian2D make(Vec2 mu, Vec2 scales, double theta, Color intensity, double opacity);

    /// Throws std::invalid_argument if an invariant is broken.
    void validate() const;

    double scale(int axis) const { return axis == 0 ? scales.x : scales.y; }
    void set_scale(int axis, double v) { (axis == 0 ? scales.x : scales.y) = v; }

    /// Axis with the largest scale; ties go to axis 0.
    int principal_axis() const { return scales.y > scales.x ? 1 : 0; }
    double max_scale() const { return scales.y > scales.x ? scales.y : scales.x; }

    /// World-space unit vector of local axis `axis` (R * e(axis)).
    Vec2 axis_direction(int axis) const;

    friend bool operator==(const Gaussian2D &, const Gaussian2D &) = default;
};

/// Squared Mahalanobis distance of `x` from the center of `g`.
double mahalanobis_sq(const Gaussian2D &g, Vec2 x);

/// Unnormalized kernel exp(-0.5 d^T Sigma^-1 d); 1 at the center.
double eval_density(const Gaussian2D &g, Vec2 x);

using GaussianId = std::uint64_t;

struct Primitive {
    GaussianId id = 0;
    Gaussian2D g;
    friend bool operator==(const Primitive &, const Primitive &) = default;
};

/// Ordered collection of primitives with stable, never-reused ids.
class GaussianSet {
public:
    GaussianSet() = default;

    GaussianId add(const Gaussian2D &g);

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    Primitive &operator[](std::size_t i) { return items_[i]; }
    const Primitive &operator[](std::size_t i) const { return items_[i]; }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    std::span<const Primitive> items() const { return items_; }

    /// Position of `id`, or -1.
    std::ptrdiff_t find(GaussianId id) const;

    /// Replaces the whole content, keeping the id counter monotone.
    void assign(std::vector<Primitive> items);

    GaussianId next_id() const { return next_id_; }

    friend bool operator==(const GaussianSet &, const GaussianSet &) = default;

private:
    std::vector<Primitive> items_;
    GaussianId next_id_ = 0;
};

struct RasterDims {
    int width = 0;
    int height = 0;

    int pixel_count() const { return width * height; }
    friend bool operator==(RasterDims, RasterDims) = default;
};

inline Vec2 pixel_position(RasterDims dims, int index) {
    return {static_cast<double>(index % dims.width), static_cast<double>(index / dims.width)};
}

/// Dense row-major image with 1 or 3 interleaved channels.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    RasterDims dims() const { return {width_, height_}; }
    std::size_t size() const { return data_.size(); }

    double &at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    /// Access by linear pixel index.
    double &px(int pixel, int c = 0) { return data_[static_cast<std::size_t>(pixel) * channels_ + c]; }
    double px(int pixel, int c = 0) const { return data_[static_cast<std::size_t>(pixel) * channels_ + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Raster &o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    friend bool operator==(const Raster &, const Raster &) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<double> data_;
};

/// Pixels a primitive influences: those within `cutoff_sigma` Mahalanobis
/// distance of its center, in ascending linear index order.
struct Footprint {
    GaussianId id = 0;
    std::vector<int> pixels;
};

Footprint footprint(const Gaussian2D &g, RasterDims dims, double cutoff_sigma = kDefaultCutoffSigma);

}  // namespace dcgs
