#include <doctest.h>

#include <cmath>
#include <random>

#include "dcgs/adc.hpp"
#include "dcgs/optim.hpp"
#include "test_util.hpp"

using namespace dcgs;

namespace {

std::vector<PixelGrad> grads_at(std::initializer_list<std::pair<Vec2, Vec2>> items) {
    std::vector<PixelGrad> out;
    int j = 0;
    for (const auto &[pos, g] : items) out.push_back({j++, pos, g});
    return out;
}

GradBuffer single_entry(GaussianId id, std::vector<PixelGrad> pixels) {
    GradBuffer gb;
    PrimitiveGrads e;
    e.id = id;
    e.pixels = std::move(pixels);
    for (const auto &p : e.pixels) e.dense.mu += p.g;
    gb.entries.push_back(e);
    return gb;
}

}  // namespace

TEST_SUITE("adc") {
    TEST_CASE("directional consistency examples") {
        const std::vector<Vec2> same{{1, 0}, {1, 0}, {1, 0}};
        auto s = directional_consistency(std::span<const Vec2>(same));
        CHECK(s.kappa == 1.0);
        CHECK(s.mean == Vec2{1, 0});
        const std::vector<Vec2> anti{{1, 0}, {-1, 0}};
        s = directional_consistency(std::span<const Vec2>(anti));
        CHECK(s.kappa == 0.0);
        const std::vector<Vec2> ortho{{1, 0}, {0, 1}};
        s = directional_consistency(std::span<const Vec2>(ortho));
        CHECK(s.mean.x == doctest::Approx(0.5));
        CHECK(s.mean.y == doctest::Approx(0.5));
        CHECK(s.kappa == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    }

    TEST_CASE("zero vectors are skipped and empty input has kappa one") {
        const std::vector<Vec2> none;
        CHECK(directional_consistency(std::span<const Vec2>(none)).kappa == 1.0);
        const std::vector<Vec2> zeros{{0, 0}, {0, 0}};
        CHECK(directional_consistency(std::span<const Vec2>(zeros)).kappa == 1.0);
        const std::vector<Vec2> mixed{{0, 0}, {3, 0}, {0, 0}, {5, 0}};
        const auto s = directional_consistency(std::span<const Vec2>(mixed));
        CHECK(s.kappa == 1.0);
        CHECK(s.count == 2);
    }

    TEST_CASE("kappa lies in [0, 1] and is rotation and magnitude invariant") {
        std::mt19937_64 rng(30);
        std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
        std::uniform_real_distribution<double> mag(1e-3, 1e3);
        std::uniform_int_distribution<int> cnt(1, 40);
        for (int t = 0; t < 1000; ++t) {
            std::vector<Vec2> v;
            const int n = cnt(rng);
            const double spread = (t % 4 + 1) * 0.8;
            for (int i = 0; i < n; ++i) {
                const double a = spread * (ang(rng) - std::numbers::pi);
                v.push_back(mag(rng) * Vec2{std::cos(a), std::sin(a)});
            }
            const double k = directional_consistency(std::span<const Vec2>(v)).kappa;
            CHECK(k >= 0.0);
            CHECK(k <= 1.0);
            const double phi = ang(rng);
            std::vector<Vec2> rot, scaled;
            for (const auto &x : v) {
                rot.push_back(rotate(x, phi));
                scaled.push_back(mag(rng) * x);
            }
            CHECK(std::abs(directional_consistency(std::span<const Vec2>(rot)).kappa - k) <= 1e-12);
            CHECK(std::abs(directional_consistency(std::span<const Vec2>(scaled)).kappa - k) <= 1e-12);
        }
    }

    TEST_CASE("criterion increments") {
        auto coherent = grads_at({{{0, 0}, {3, 4}}});
        auto t = criterion_terms(coherent);
        CHECK(t.dcc == 0.0);
        CHECK(t.abs == doctest::Approx(5.0));
        CHECK(t.mag3dgs == doctest::Approx(5.0));

        auto ortho = grads_at({{{0, 0}, {1, 0}}, {{1, 0}, {0, 1}}});
        t = criterion_terms(ortho);
        CHECK(t.abs == doctest::Approx(std::sqrt(2.0)));
        CHECK(t.dcc == doctest::Approx(0.41421356).epsilon(1e-7));

        auto cancel = grads_at({{{0, 0}, {1, 0}}, {{1, 0}, {-1, 0}}});
        t = criterion_terms(cancel);
        CHECK(t.mag3dgs == 0.0);
        CHECK(t.abs == doctest::Approx(2.0));
        CHECK(t.dcc == doctest::Approx(2.0));
    }

    TEST_CASE("accumulator sums increments per visible step") {
        DensifyAccumulator acc(5);
        GaussianSet set;
        const GaussianId id = set.add(Gaussian2D::make({0, 0}, {1, 1}, 0, {1, 1, 1}, 1));
        const GradBuffer gb = single_entry(id, grads_at({{{0, 0}, {1, 0}}, {{1, 0}, {0, 1}}}));
        acc.accumulate_step(set, gb);
        const AccEntry *e = acc.find(id);
        REQUIRE(e != nullptr);
        CHECK(e->nu == 1);
        CHECK(criterion_value(*e, Criterion::DCC) == doctest::Approx(0.41421356).epsilon(1e-7));
        CHECK(criterion_value(*e, Criterion::AbsGS) == doctest::Approx(std::sqrt(2.0)));
        CHECK(criterion_value(*e, Criterion::Mag3DGS) == doctest::Approx(std::sqrt(2.0)));
        CHECK(e->split_costs.size() == 5);
        acc.accumulate_step(set, gb);
        CHECK(acc.find(id)->nu == 2);
        CHECK(criterion_value(*acc.find(id), Criterion::DCC) == doctest::Approx(0.41421356).epsilon(1e-7));

        GradBuffer hidden = single_entry(id, {});
        acc.accumulate_step(set, hidden);
        CHECK(acc.find(id)->nu == 2);
        acc.reset();
        CHECK(acc.find(id) == nullptr);
        CHECK(criterion_value(AccEntry{}, Criterion::DCC) == 0.0);
    }

    TEST_CASE("dcc sum never exceeds the absgs sum") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> n(0, 1);
        DensifyAccumulator acc(5);
        GaussianSet set;
        const GaussianId id = set.add(Gaussian2D::make({0, 0}, {2, 1}, 0.3, {1, 1, 1}, 1));
        for (int step = 0; step < 200; ++step) {
            std::vector<PixelGrad> px;
            for (int j = 0; j < 30; ++j) px.push_back({j, {n(rng), n(rng)}, {n(rng) + 0.5, n(rng)}});
            acc.accumulate_step(set, single_entry(id, px));
            const AccEntry *e = acc.find(id);
            CHECK(e->dcc_sum <= e->abs_sum);
            CHECK(e->dcc_sum >= 0.0);
            CHECK(e->mag3dgs_sum <= e->abs_sum * (1 + 1e-12));
        }
    }

    TEST_CASE("candidate positions") {
        const auto x5 = candidate_positions(5);
        const double e5[] = {1.0 / 6, 1.0 / 3, 0.5, 2.0 / 3, 5.0 / 6};
        for (int i = 0; i < 5; ++i) CHECK(x5[i] == doctest::Approx(e5[i]).epsilon(1e-15));
        const auto x3 = candidate_positions(3);
        CHECK(x3[0] == doctest::Approx(0.25));
        CHECK(x3[1] == 0.5);
        CHECK(x3[2] == doctest::Approx(0.75));
        const auto x60 = candidate_positions(60);
        CHECK(x60.size() == 60);
        CHECK(x60.front() == doctest::Approx(1.0 / 61));
        CHECK(x60.back() == doctest::Approx(60.0 / 61));
    }

    TEST_CASE("split costs are cost_at at the candidate points") {
        std::mt19937_64 rng(32);
        std::normal_distribution<double> n(0, 1);
        for (int trial = 0; trial < 50; ++trial) {
            Gaussian2D g = test::random_gaussian(rng, {5, 5}, {10, 10}, 0.5, 3.0);
            std::vector<PixelGrad> px;
            for (int j = 0; j < 40; ++j) px.push_back({j, g.mu + Vec2{3 * n(rng), 3 * n(rng)}, {n(rng), n(rng)}});
            for (int nc : {3, 5, 60}) {
                const auto costs = eval_split_costs(g, nc, px);
                const auto xs = candidate_positions(nc);
                const int a = g.principal_axis();
                const Vec2 p = g.axis_direction(a);
                const double d = 6 * g.scale(a);
                for (int k = 0; k < nc; ++k) {
                    const Vec2 xk = g.mu + ((xs[k] - 0.5) * d) * p;
                    CHECK(costs[k] == doctest::Approx(cost_at(xk, g.mu + (0.5 * d) * p, px)).epsilon(1e-12));
                }
            }
        }
        CHECK(eval_split_costs(Gaussian2D{}, 5, {}) == std::vector<double>(5, 0.0));
    }

    TEST_CASE("cost_at examples") {
        const Vec2 xk{0, 0}, xend{10, 0};
        auto one_side = grads_at({{{1, 0}, {2, 1}}, {{2, 3}, {4, 2}}, {{5, -1}, {1, 0.5}}});
        CHECK(cost_at(xk, xend, one_side) == doctest::Approx(0.0).epsilon(1e-15));
        auto per_side = grads_at({{{-1, 0}, {1, 0}}, {{-2, 1}, {1, 0}}, {{1, 0}, {-1, 0}}, {{3, 2}, {-1, 0}}});
        CHECK(cost_at(xk, xend, per_side) == doctest::Approx(0.0));
        auto ortho = grads_at({{{-1, 0}, {1, 0}}, {{-2, 0}, {0, 1}}});
        CHECK(cost_at(xk, xend, ortho) == doctest::Approx(0.41421356).epsilon(1e-7));
    }

    TEST_CASE("pixels on the cut line go right") {
        const Vec2 xk{2, 2}, xend{2, 9};
        // Both on the boundary or the right side: one side holds both, cost > 0.
        auto boundary = grads_at({{{2, 2}, {1, 0}}, {{5, 2}, {0, 1}}, {{2, 4}, {0, 1}}});
        const double both_right = cost_at(xk, xend, boundary);
        auto split = grads_at({{{2, 1}, {1, 0}}, {{5, 2}, {0, 1}}, {{2, 4}, {0, 1}}});
        CHECK(both_right > 0.1);
        CHECK(cost_at(xk, xend, split) == doctest::Approx(0.0));
    }

    TEST_CASE("select_x_opt examples") {
        const std::vector<double> sym{4, 1, 0, 1, 4};
        CHECK(select_x_opt(sym, Placement::SparseArgmin) == 0.5);
        CHECK(select_x_opt(sym, Placement::Regression) == doctest::Approx(0.5).epsilon(1e-12));

        const auto xs = candidate_positions(5);
        std::vector<double> third, pt4;
        for (double x : xs) {
            third.push_back((x - 1.0 / 3) * (x - 1.0 / 3));
            pt4.push_back((x - 0.4) * (x - 0.4));
        }
        CHECK(select_x_opt(third, Placement::Regression) == doctest::Approx(1.0 / 3).epsilon(1e-12));
        CHECK(select_x_opt(third, Placement::SparseArgmin) == doctest::Approx(1.0 / 3).epsilon(1e-15));
        CHECK(select_x_opt(pt4, Placement::Regression) == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(select_x_opt(pt4, Placement::SparseArgmin) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }

    TEST_CASE("argmin tie rules") {
        CHECK(select_x_opt(std::vector<double>(5, 2.0), Placement::SparseArgmin) == 0.5);
        CHECK(select_x_opt(std::vector<double>(5, 2.0), Placement::Regression) == 0.5);
        CHECK(select_x_opt(std::vector<double>(60, 0.0), Placement::DenseArgmin) == 0.5);
        const std::vector<double> edges{0, 3, 3, 3, 0};
        CHECK(select_x_opt(edges, Placement::SparseArgmin) == doctest::Approx(1.0 / 6));
        const std::vector<double> near{5, 1, 2, 1, 5};
        CHECK(select_x_opt(near, Placement::SparseArgmin) == doctest::Approx(1.0 / 3));
        const std::vector<double> inner{0, 3, 3, 0, 3};
        CHECK(select_x_opt(inner, Placement::SparseArgmin) == doctest::Approx(2.0 / 3));
    }

    TEST_CASE("regression recovers the vertex of exact quadratics") {
        std::mt19937_64 rng(33);
        std::uniform_real_distribution<double> u(0, 1);
        for (int n : {5, 7}) {
            const auto xs = candidate_positions(n);
            double worst = 0.0;
            for (int t = 0; t < 1000; ++t) {
                const double v = xs.front() + (xs.back() - xs.front()) * u(rng);
                const double a = 0.01 + 100 * u(rng);
                const double c = 10 * (u(rng) - 0.5);
                std::vector<double> costs;
                for (double x : xs) costs.push_back(a * (x - v) * (x - v) + c);
                worst = std::max(worst, std::abs(select_x_opt(costs, Placement::Regression) - v));
            }
            CHECK(worst < 1e-9);
        }
    }

    TEST_CASE("regression falls back to argmin") {
        const auto xs = candidate_positions(5);
        std::vector<double> concave, outside, linear;
        for (double x : xs) {
            concave.push_back(-(x - 0.45) * (x - 0.45));
            outside.push_back((x - 1.4) * (x - 1.4));
            linear.push_back(3 * x);
        }
        CHECK(select_x_opt(concave, Placement::Regression) == select_x_opt(concave, Placement::SparseArgmin));
        CHECK(select_x_opt(outside, Placement::Regression) == doctest::Approx(5.0 / 6));
        CHECK(select_x_opt(linear, Placement::Regression) == doctest::Approx(1.0 / 6));
    }

    TEST_CASE("fit_quadratic reproduces exact data") {
        const std::vector<double> t{-2, -1, 0, 1, 2};
        std::vector<double> y;
        for (double x : t) y.push_back(1.5 - 0.5 * x + 2.0 * x * x);
        const QuadraticFit f = fit_quadratic(t, y);
        CHECK(f.c0 == doctest::Approx(1.5));
        CHECK(f.c1 == doctest::Approx(-0.5));
        CHECK(f.c2 == doctest::Approx(2.0));
    }

    TEST_CASE("split_gaussian examples") {
        const Gaussian2D g = Gaussian2D::make({0, 0}, {1.0, 0.5}, 0.0, {0.3, 0.6, 0.9}, 0.8);
        auto [l, r] = split_gaussian(0.5, g);
        CHECK(l.mu.x == doctest::Approx(-1.5));
        CHECK(l.mu.y == doctest::Approx(0.0));
        CHECK(r.mu.x == doctest::Approx(1.5));
        CHECK(l.scales == Vec2{0.5, 0.5});
        CHECK(r.scales == Vec2{0.5, 0.5});
        CHECK(l.opacity == doctest::Approx(0.4));
        CHECK(r.opacity == doctest::Approx(0.4));
        CHECK(l.intensity == g.intensity);
        CHECK(r.theta == g.theta);

        auto [l3, r3] = split_gaussian(1.0 / 3, g);
        CHECK(l3.mu.x == doctest::Approx(-2.0));
        CHECK(r3.mu.x == doctest::Approx(1.0));
        CHECK(l3.scales.x == doctest::Approx(1.0 / 3));
        CHECK(r3.scales.x == doctest::Approx(2.0 / 3));
        CHECK(l3.scales.y == 0.5);
        CHECK(l3.opacity == doctest::Approx(0.8 / 3));
        CHECK(r3.opacity == doctest::Approx(1.6 / 3));
    }

    TEST_CASE("split follows the rotated principal axis") {
        const Gaussian2D g = Gaussian2D::make({4, 4}, {0.5, 2.0}, 0.3, {1, 1, 1}, 1.0);
        const SplitPlan plan = plan_split(0.25, g, 7);
        CHECK(plan.axis == 1);
        CHECK(plan.diameter == doctest::Approx(12.0));
        const Vec2 p = g.axis_direction(1);
        CHECK(norm(plan.left.mu - (g.mu - 4.5 * p)) < 1e-12);
        CHECK(norm(plan.right.mu - (g.mu + 1.5 * p)) < 1e-12);
        CHECK(plan.left.scales.y == doctest::Approx(0.5));
        CHECK(plan.right.scales.y == doctest::Approx(1.5));
    }

    TEST_CASE("split conserves opacity and principal scale") {
        std::mt19937_64 rng(34);
        std::uniform_real_distribution<double> u(1e-6, 1 - 1e-6);
        for (int t = 0; t < 1000; ++t) {
            const Gaussian2D g = test::random_gaussian(rng, {-10, -10}, {10, 10}, 0.01, 50.0);
            const double x = u(rng);
            auto [l, r] = split_gaussian(x, g);
            const int a = g.principal_axis();
            CHECK(std::abs((l.opacity + r.opacity) - g.opacity) <= std::nextafter(g.opacity, 2.0) - g.opacity);
            CHECK(std::abs((l.scale(a) + r.scale(a)) - g.scale(a)) <=
                  std::nextafter(g.scale(a), 1e9) - g.scale(a));
        }
    }

    TEST_CASE("random split") {
        const Gaussian2D g = Gaussian2D::make({3, -2}, {2.0, 0.8}, 0.7, {1, 1, 1}, 0.6);
        Rng a(5), b(5);
        auto [l1, r1] = random_split(g, a);
        auto [l2, r2] = random_split(g, b);
        CHECK(l1 == l2);
        CHECK(r1 == r2);
        CHECK(l1.scales.x == g.scales.x / 1.6);
        CHECK(l1.scales.y == g.scales.y / 1.6);
        CHECK(l1.opacity == g.opacity);

        Rng rng(6);
        int inside = 0;
        const int draws = 100000;
        for (int i = 0; i < draws / 2; ++i) {
            auto [l, r] = random_split(g, rng);
            inside += mahalanobis_sq(g, l.mu) <= 9.0;
            inside += mahalanobis_sq(g, r.mu) <= 9.0;
        }
        CHECK(double(inside) / draws == doctest::Approx(1 - std::exp(-4.5)).epsilon(0.002));
    }

    TEST_CASE("refine rules") {
        AdcConfig cfg;
        cfg.tau_p = 1.0;
        cfg.tau_s = 2.0;
        cfg.criterion = Criterion::AbsGS;
        cfg.placement = Placement::SparseArgmin;
        Rng rng(1);

        GaussianSet set;
        const GaussianId small = set.add(Gaussian2D::make({2, 2}, {1.0, 0.5}, 0, {1, 1, 1}, 0.5));
        const GaussianId big = set.add(Gaussian2D::make({8, 8}, {3.0, 1.0}, 0, {1, 1, 1}, 0.5));
        const GaussianId quiet = set.add(Gaussian2D::make({5, 5}, {3.0, 1.0}, 0, {1, 1, 1}, 0.5));
        const GaussianId faint = set.add(Gaussian2D::make({6, 2}, {1.0, 1.0}, 0, {1, 1, 1}, 0.001));

        DensifyAccumulator acc(5);
        GradBuffer gb;
        for (GaussianId id : {small, big, quiet, faint}) {
            PrimitiveGrads e;
            e.id = id;
            const double m = id == quiet ? 0.1 : 3.0;
            const Vec2 mu = set[set.find(id)].g.mu;
            e.pixels = {{0, mu + Vec2{-1, 0}, {m, 0}}, {1, mu + Vec2{1, 0}, {0, m}}};
            gb.entries.push_back(e);
        }
        acc.accumulate_step(set, gb);
        const RefineStats st = refine(set, acc, cfg, rng);
        CHECK(st.cloned == 2);  // small and faint
        CHECK(st.split == 1);
        CHECK(st.pruned == 2);  // faint and its clone
        // Survivors (small, quiet), then newborns in parent order: clone of
        // small, the two halves of big.
        REQUIRE(set.size() == 5);
        CHECK(set[0].id == small);
        CHECK(set[1].id == quiet);
        CHECK(set[2].g == set[0].g);
        CHECK(set[2].id != small);
        CHECK(set[3].g.opacity + set[4].g.opacity == doctest::Approx(0.5));
        CHECK(set[3].g.scales.x + set[4].g.scales.x == doctest::Approx(3.0));
        CHECK(set.find(big) == -1);
        CHECK(acc.size() == 0);
    }

    TEST_CASE("refine without candidates only prunes") {
        AdcConfig cfg;
        GaussianSet set;
        set.add(Gaussian2D::make({2, 2}, {1.0, 0.5}, 0, {1, 1, 1}, 0.5));
        set.add(Gaussian2D::make({2, 2}, {1.0, 0.5}, 0, {1, 1, 1}, 0.001));
        DensifyAccumulator acc(5);
        Rng rng(2);
        const GaussianSet before = set;
        const RefineStats st = refine(set, acc, cfg, rng);
        CHECK(st.split + st.cloned == 0);
        CHECK(st.pruned == 1);
        CHECK(set.size() == 1);
        CHECK(set[0].g == before[0].g);
    }

    TEST_CASE("refine is deterministic for a seed") {
        std::mt19937_64 g(35);
        std::normal_distribution<double> n(0, 1);
        GaussianSet base;
        for (int i = 0; i < 20; ++i) base.add(test::random_gaussian(g, {0, 0}, {30, 30}, 0.5, 4.0));
        GradBuffer gb;
        for (const auto &p : base) {
            PrimitiveGrads e;
            e.id = p.id;
            for (int j = 0; j < 10; ++j) e.pixels.push_back({j, p.g.mu + Vec2{n(g), n(g)}, {2 * n(g), 2 * n(g)}});
            gb.entries.push_back(e);
        }
        for (Placement pl : {Placement::Random, Placement::Regression}) {
            AdcConfig cfg;
            cfg.placement = pl;
            GaussianSet a = base, b = base;
            DensifyAccumulator acc_a(5), acc_b(5);
            acc_a.accumulate_step(a, gb);
            acc_b.accumulate_step(b, gb);
            Rng ra(9), rb(9);
            refine(a, acc_a, cfg, ra);
            refine(b, acc_b, cfg, rb);
            CHECK(a == b);
        }
    }

    TEST_CASE("config validation and names") {
        AdcConfig cfg;
        CHECK_NOTHROW(cfg.validate());
        cfg.n_candidates = 4;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg.n_candidates = 5;
        cfg.densify_until_frac = 0.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        CHECK(parse_criterion("dcc") == Criterion::DCC);
        CHECK(parse_criterion("AbsGS") == Criterion::AbsGS);
        CHECK(parse_placement("dense") == Placement::DenseArgmin);
        CHECK(parse_placement(to_string(Placement::Regression)) == Placement::Regression);
        CHECK_THROWS_AS(parse_placement("middle"), std::invalid_argument);
    }
}
