#include "dcgs/metrics.hpp"

#include <algorithm>
#include <string>

namespace dcgs {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_same_shape(const Raster &a, const Raster &b, const char *who) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": image shapes differ");
}

double ssim_from_moments(double ma, double mb, double va, double vb, double cov, double c1, double c2) {
    return ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

}  // namespace

double psnr(const Raster &a, const Raster &b) {
    require_same_shape(a, b, "psnr");
    double se = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = clamp01(da[i]) - clamp01(db[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(da.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Raster &a, const Raster &b, const SsimParams &params) {
    require_same_shape(a, b, "ssim");
    const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
    const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
    const int w = a.width();
    const int h = a.height();
    const int win = params.window;

    double total = 0.0;
    if (w < win || h < win) {
        // Single global window, uniform weights.
        const double n = static_cast<double>(w) * h;
        for (int c = 0; c < a.channels(); ++c) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const double va = clamp01(a.at(x, y, c));
                    const double vb = clamp01(b.at(x, y, c));
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double ma = sa / n, mb = sb / n;
            total += ssim_from_moments(ma, mb, saa / n - ma * ma, sbb / n - mb * mb, sab / n - ma * mb, c1, c2);
        }
        return total / a.channels();
    }

    std::vector<double> kernel(static_cast<std::size_t>(win) * win);
    const double half = (win - 1) / 2.0;
    double ksum = 0.0;
    for (int y = 0; y < win; ++y)
        for (int x = 0; x < win; ++x) {
            const double dx = x - half, dy = y - half;
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma * params.sigma));
            kernel[static_cast<std::size_t>(y) * win + x] = v;
            ksum += v;
        }
    for (double &v : kernel) v /= ksum;

    const int nx = w - win + 1;
    const int ny = h - win + 1;
    for (int c = 0; c < a.channels(); ++c) {
        double channel_sum = 0.0;
        for (int oy = 0; oy < ny; ++oy)
            for (int ox = 0; ox < nx; ++ox) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int y = 0; y < win; ++y)
                    for (int x = 0; x < win; ++x) {
                        const double k = kernel[static_cast<std::size_t>(y) * win + x];
                        const double va = clamp01(a.at(ox + x, oy + y, c));
                        const double vb = clamp01(b.at(ox + x, oy + y, c));
                        ma += k * va;
                        mb += k * vb;
                        maa += k * va * va;
                        mbb += k * vb * vb;
                        mab += k * va * vb;
                    }
                channel_sum += ssim_from_moments(ma, mb, maa - ma * ma, mbb - mb * mb, mab - ma * mb, c1, c2);
            }
        total += channel_sum / (static_cast<double>(nx) * ny);
    }
    return total / a.channels();
}

Raster to_luminance(const Raster &image) {
    if (image.channels() == 1) return image;
    Raster out(image.width(), image.height(), 1);
    const int n = image.dims().pixel_count();
    for (int j = 0; j < n; ++j)
        out.px(j) = 0.299 * image.px(j, 0) + 0.587 * image.px(j, 1) + 0.114 * image.px(j, 2);
    return out;
}

std::vector<Vec2> image_gradients(const Raster &gray) {
    const int w = gray.width();
    const int h = gray.height();
    std::vector<Vec2> g(static_cast<std::size_t>(w) * h);
    auto diff = [](double lo, double hi, int span) { return (hi - lo) / span; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec2 d;
            if (w > 1) {
                const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
                d.x = diff(gray.at(x0, y), gray.at(x1, y), x1 - x0);
            }
            if (h > 1) {
                const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
                d.y = diff(gray.at(x, y0), gray.at(x, y1), y1 - y0);
            }
            g[static_cast<std::size_t>(y) * w + x] = d;
        }
    return g;
}

DcMap dc_map(const Raster &image, const DcMapParams &params) {
    const Raster gray = to_luminance(image);
    const int w = gray.width();
    const int h = gray.height();
    const auto grads = image_gradients(gray);

    // Unit directions of the gradients that clear the floor.
    std::vector<Vec2> unit(grads.size());
    std::vector<std::uint8_t> strong(grads.size(), 0);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const double n = norm(grads[i]);
        if (n >= params.mag_floor && n > 0.0) {
            unit[i] = (1.0 / n) * grads[i];
            strong[i] = 1;
        }
    }

    DcMap map{gray.dims(), std::vector<double>(grads.size(), kDcMapMasked),
              std::vector<std::uint8_t>(grads.size(), 1)};
    const int r = params.window_radius;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec2 sum;
            int count = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
                    if (!strong[i]) continue;
                    sum += unit[i];
                    ++count;
                }
            if (count < params.min_samples) continue;
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            map.kappa[i] = std::clamp(norm(sum) / count, 0.0, 1.0);
            map.mask[i] = 0;
        }
    return map;
}

}  // namespace dcgs
