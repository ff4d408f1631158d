#include <doctest.h>

#include <cmath>
#include <random>

#include "dcgs/grad.hpp"
#include "test_util.hpp"

using namespace dcgs;

namespace {

struct Scene8 {
    GaussianSet set;
    Raster target;
};

Scene8 random_scene(std::uint64_t seed, int channels) {
    std::mt19937_64 rng(seed);
    Scene8 s;
    for (int i = 0; i < 3; ++i) s.set.add(test::random_gaussian(rng, {1, 1}, {7, 7}, 0.7, 2.5));
    s.target = Raster(8, 8, channels);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto &v : s.target.data()) v = u(rng);
    return s;
}

}  // namespace

TEST_SUITE("grad") {
    TEST_CASE("zero residual gives zero gradients") {
        std::mt19937_64 rng(20);
        GaussianSet set;
        for (int i = 0; i < 4; ++i) set.add(test::random_gaussian(rng, {0, 0}, {10, 10}));
        const RenderOutput out = render(set, {10, 10}, 3);
        const GradBuffer gb = positional_gradients(out, out.image, set);
        for (const auto &e : gb.entries) {
            for (const auto &pg : e.pixels) CHECK(pg.g == Vec2{0, 0});
            CHECK(e.dense.mu == Vec2{0, 0});
            CHECK(e.dense.opacity == 0.0);
        }
        for (std::size_t i = 0; i < set.size(); ++i)
            CHECK(std::abs(fd_oracle(set, out.image, {i, ParamGroup::Mu, 0}, 1e-4)) < 1e-8);
    }

    TEST_CASE("symmetric hot pixels cancel in the sum but not per pixel") {
        GaussianSet set;
        set.add(Gaussian2D::make({5.0, 5.0}, {1.5, 1.5}, 0.0, {1, 1, 1}, 0.5));
        Raster target(11, 11, 1);
        const RenderOutput out = render(set, {11, 11}, 1);
        target = out.image;
        target.at(3, 5) += 1.0;
        target.at(7, 5) += 1.0;
        const GradBuffer gb = positional_gradients(out, target, set);
        const auto &e = gb.entries[0];
        CHECK(std::abs(e.dense.mu.x) < 1e-14);
        CHECK(std::abs(e.dense.mu.y) < 1e-14);
        int nonzero = 0;
        for (const auto &pg : e.pixels) nonzero += norm(pg.g) > 0.0;
        CHECK(nonzero == 2);
    }

    TEST_CASE("single residual pixel gradient follows the inverse covariance") {
        const Gaussian2D g = Gaussian2D::make({6.0, 5.0}, {2.0, 1.0}, 0.5, {1, 1, 1}, 0.7);
        GaussianSet set;
        set.add(g);
        const RenderOutput out = render(set, {12, 12}, 1);
        for (double bump : {0.3, -0.3}) {
            Raster target = out.image;
            target.at(8, 6) += bump;
            const GradBuffer gb = positional_gradients(out, target, set);
            // L_j = r^2 with r = image - target = -bump.
            const Vec2 d = Vec2{8, 6} - g.mu;
            const Vec2 u = rotate(d, -g.theta);
            const Vec2 sinv_d = rotate({u.x / (g.scales.x * g.scales.x), u.y / (g.scales.y * g.scales.y)}, g.theta);
            const double r = -bump;
            const Vec2 expected = (2.0 * r * g.opacity * g.intensity[0] * eval_density(g, {8, 6})) * sinv_d;
            for (const auto &pg : gb.entries[0].pixels) {
                if (pg.pixel == 6 * 12 + 8) {
                    CHECK(pg.g.x == doctest::Approx(expected.x).epsilon(1e-12));
                    CHECK(pg.g.y == doctest::Approx(expected.y).epsilon(1e-12));
                    CHECK(dot(pg.g, sinv_d) * r > 0.0);
                } else {
                    CHECK(pg.g == Vec2{0, 0});
                }
            }
        }
    }

    TEST_CASE("per-pixel gradients sum to the dense center gradient") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Scene8 s = random_scene(seed, 3);
            const RenderOutput out = render(s.set, s.target.dims(), 3);
            const GradBuffer gb = positional_gradients(out, s.target, s.set);
            for (const auto &e : gb.entries) {
                Vec2 sum;
                for (const auto &pg : e.pixels) sum += pg.g;
                CHECK(sum == e.dense.mu);
            }
        }
    }

    TEST_CASE("doubling the residual doubles every pixel gradient") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Scene8 s = random_scene(100 + seed, 1);
            const RenderOutput out = render(s.set, s.target.dims(), 1);
            Raster t2 = s.target;
            for (std::size_t i = 0; i < t2.size(); ++i)
                t2.data()[i] = out.image.data()[i] - 2.0 * (out.image.data()[i] - s.target.data()[i]);
            const GradBuffer a = positional_gradients(out, s.target, s.set);
            const GradBuffer b = positional_gradients(out, t2, s.set);
            for (std::size_t i = 0; i < a.entries.size(); ++i)
                for (std::size_t k = 0; k < a.entries[i].pixels.size(); ++k) {
                    const Vec2 ga = a.entries[i].pixels[k].g, gb = b.entries[i].pixels[k].g;
                    CHECK(gb.x == doctest::Approx(2 * ga.x).epsilon(1e-10));
                    CHECK(gb.y == doctest::Approx(2 * ga.y).epsilon(1e-10));
                }
        }
    }

    TEST_CASE("analytic gradients match central differences for every parameter group") {
        const ParamGroup groups[] = {ParamGroup::Mu, ParamGroup::Scales, ParamGroup::Theta, ParamGroup::Intensity,
                                     ParamGroup::Opacity};
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Scene8 s = random_scene(seed, 3);
            const RenderOutput out = render(s.set, s.target.dims(), 3);
            const GradBuffer gb = positional_gradients(out, s.target, s.set);
            for (std::size_t i = 0; i < s.set.size(); ++i)
                for (ParamGroup grp : groups) {
                    const int comps = grp == ParamGroup::Intensity ? 3 : (grp == ParamGroup::Mu || grp == ParamGroup::Scales ? 2 : 1);
                    for (int c = 0; c < comps; ++c) {
                        const double fd = fd_oracle(s.set, s.target, {i, grp, c}, 1e-4);
                        const double an = get_grad(gb.entries[i].dense, grp, c);
                        worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
                    }
                }
        }
        CHECK(worst < 1e-4);
    }

    TEST_CASE("primitive outside the raster has zero gradients") {
        GaussianSet set;
        set.add(Gaussian2D::make({-40.0, -40.0}, {1, 1}, 0, {1, 1, 1}, 0.5));
        const Raster target(8, 8, 1, 0.5);
        const RenderOutput out = render(set, {8, 8}, 1);
        const GradBuffer gb = positional_gradients(out, target, set);
        CHECK_FALSE(gb.entries[0].visible());
        CHECK(gb.entries[0].dense.opacity == 0.0);
        CHECK(fd_oracle(set, target, {0, ParamGroup::Opacity, 0}, 1e-4) == 0.0);
    }

    TEST_CASE("parameter accessors round-trip") {
        Gaussian2D g;
        set_param(g, ParamGroup::Mu, 1, 3.5);
        set_param(g, ParamGroup::Scales, 0, 2.5);
        set_param(g, ParamGroup::Theta, 0, 0.25);
        set_param(g, ParamGroup::Intensity, 2, 0.75);
        set_param(g, ParamGroup::Opacity, 0, 0.125);
        CHECK(g.mu.y == 3.5);
        CHECK(get_param(g, ParamGroup::Scales, 0) == 2.5);
        CHECK(get_param(g, ParamGroup::Theta, 0) == 0.25);
        CHECK(get_param(g, ParamGroup::Intensity, 2) == 0.75);
        CHECK(get_param(g, ParamGroup::Opacity, 0) == 0.125);
    }
}
