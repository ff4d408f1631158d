#include "dcgs/render.hpp"

namespace dcgs {

RenderOutput render(const GaussianSet &set, RasterDims dims, int channels, double cutoff_sigma) {
    std::vector<Footprint> fps;
    fps.reserve(set.size());
    for (const auto &p : set) {
        fps.push_back(footprint(p.g, dims, cutoff_sigma));
        fps.back().id = p.id;
    }
    return render_with_footprints(set, dims, channels, fps);
}

RenderOutput render_with_footprints(const GaussianSet &set, RasterDims dims, int channels,
                                    std::span<const Footprint> footprints) {
    if (footprints.size() != set.size())
        throw std::invalid_argument("render_with_footprints: one footprint per primitive required");
    RenderOutput out{Raster(dims.width, dims.height, channels), {}};
    out.contribs.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto &[id, g] = set[i];
        PrimitiveContrib pc{id, footprints[i].pixels, {}};
        pc.density.reserve(pc.pixels.size());
        for (int j : pc.pixels) {
            const double w = eval_density(g, pixel_position(dims, j));
            pc.density.push_back(w);
            for (int c = 0; c < channels; ++c) out.image.px(j, c) += g.opacity * g.intensity[c] * w;
        }
        out.contribs.push_back(std::move(pc));
    }
    return out;
}

LossResult loss(const Raster &image, const Raster &target) {
    if (!image.same_shape(target)) throw std::invalid_argument("loss: image and target shapes differ");
    LossResult r{0.0, Raster(image.width(), image.height(), 1)};
    const int n = image.dims().pixel_count();
    for (int j = 0; j < n; ++j) {
        double e = 0.0;
        for (int c = 0; c < image.channels(); ++c) {
            const double d = image.px(j, c) - target.px(j, c);
            e += d * d;
        }
        r.per_pixel.px(j) = e;
        r.total += e;
    }
    return r;
}

}  // namespace dcgs
