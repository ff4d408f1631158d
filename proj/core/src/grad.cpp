#include "dcgs/grad.hpp"

namespace dcgs {

GradBuffer positional_gradients(const RenderOutput &out, const Raster &target, const GaussianSet &set) {
    const Raster &image = out.image;
    if (!image.same_shape(target)) throw std::invalid_argument("positional_gradients: shape mismatch");
    if (out.contribs.size() != set.size())
        throw std::invalid_argument("positional_gradients: render output does not match the set");
    const RasterDims dims = image.dims();
    const int channels = image.channels();

    GradBuffer buf;
    buf.entries.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto &[id, g] = set[i];
        const PrimitiveContrib &pc = out.contribs[i];
        PrimitiveGrads pg{id, {}, {}};
        pg.pixels.reserve(pc.pixels.size());

        const double cs = std::cos(g.theta);
        const double sn = std::sin(g.theta);
        const double inv_sx2 = 1.0 / (g.scales.x * g.scales.x);
        const double inv_sy2 = 1.0 / (g.scales.y * g.scales.y);

        for (std::size_t k = 0; k < pc.pixels.size(); ++k) {
            const int j = pc.pixels[k];
            const double w = pc.density[k];
            const Vec2 x = pixel_position(dims, j);
            const double dx = x.x - g.mu.x;
            const double dy = x.y - g.mu.y;
            const double u = cs * dx + sn * dy;
            const double v = -sn * dx + cs * dy;

            // dL_j/dG summed over channels, without the opacity factor.
            double weighted = 0.0;
            for (int c = 0; c < channels; ++c) {
                const double r2 = 2.0 * (image.px(j, c) - target.px(j, c));
                weighted += r2 * g.intensity[c];
                pg.dense.intensity[c] += r2 * g.opacity * w;
            }
            pg.dense.opacity += weighted * w;

            const double dl_dw = g.opacity * weighted;
            const double a = u * inv_sx2;
            const double b = v * inv_sy2;
            const Vec2 dmu{dl_dw * w * (cs * a - sn * b), dl_dw * w * (sn * a + cs * b)};
            pg.pixels.push_back({j, x, dmu});
            pg.dense.mu += dmu;
            pg.dense.scales.x += dl_dw * w * u * u * inv_sx2 / g.scales.x;
            pg.dense.scales.y += dl_dw * w * v * v * inv_sy2 / g.scales.y;
            pg.dense.theta -= dl_dw * w * u * v * (inv_sx2 - inv_sy2);
        }
        buf.entries.push_back(std::move(pg));
    }
    return buf;
}

double get_param(const Gaussian2D &g, ParamGroup group, int component) {
    switch (group) {
        case ParamGroup::Mu: return component == 0 ? g.mu.x : g.mu.y;
        case ParamGroup::Scales: return g.scale(component);
        case ParamGroup::Theta: return g.theta;
        case ParamGroup::Intensity: return g.intensity[component];
        case ParamGroup::Opacity: return g.opacity;
    }
    return 0.0;
}

void set_param(Gaussian2D &g, ParamGroup group, int component, double value) {
    switch (group) {
        case ParamGroup::Mu: (component == 0 ? g.mu.x : g.mu.y) = value; break;
        case ParamGroup::Scales: g.set_scale(component, value); break;
        case ParamGroup::Theta: g.theta = value; break;
        case ParamGroup::Intensity: g.intensity[component] = value; break;
        case ParamGroup::Opacity: g.opacity = value; break;
    }
}

double get_grad(const ParamGrad &d, ParamGroup group, int component) {
    switch (group) {
        case ParamGroup::Mu: return component == 0 ? d.mu.x : d.mu.y;
        case ParamGroup::Scales: return component == 0 ? d.scales.x : d.scales.y;
        case ParamGroup::Theta: return d.theta;
        case ParamGroup::Intensity: return d.intensity[component];
        case ParamGroup::Opacity: return d.opacity;
    }
    return 0.0;
}

double fd_oracle(const GaussianSet &set, const Raster &target, ParamSelector sel, double h, double cutoff_sigma) {
    if (!(h > 0.0)) throw std::invalid_argument("fd_oracle: step must be positive");
    if (sel.primitive >= set.size()) throw std::out_of_range("fd_oracle: primitive index");
    std::vector<Footprint> fps;
    for (const auto &p : set) {
        fps.push_back(footprint(p.g, target.dims(), cutoff_sigma));
        fps.back().id = p.id;
    }
    auto eval = [&](double delta) {
        GaussianSet probe = set;
        Gaussian2D &g = probe[sel.primitive].g;
        set_param(g, sel.group, sel.component, get_param(g, sel.group, sel.component) + delta);
        const RenderOutput out = render_with_footprints(probe, target.dims(), target.channels(), fps);
        return loss(out.image, target).total;
    };
    return (eval(h) - eval(-h)) / (2.0 * h);
}

}  // namespace dcgs
