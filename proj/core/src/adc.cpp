#include "dcgs/adc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <string>

namespace dcgs {

namespace {

struct DirectionSum {
    Vec2 unit_sum;
    Vec2 abs_sum;
    int count = 0;

    void add(Vec2 g) {
        abs_sum += abs_components(g);
        const double n = norm(g);
        if (n > 0.0) {
            unit_sum += (1.0 / n) * g;
            ++count;
        }
    }

    double kappa() const { return count == 0 ? 1.0 : std::clamp(norm(unit_sum) / count, 0.0, 1.0); }

    double cost() const { return (1.0 - kappa()) * norm(abs_sum); }
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto &ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

// Offset of candidate k (1-based) from the center, in units of the sampling
// interval. Integer for odd n.
double candidate_offset(int k, int n) { return k - 0.5 * (n + 1); }

std::size_t argmin_index(std::span<const double> costs) {
    const int n = static_cast<int>(costs.size());
    std::size_t best = 0;
    for (std::size_t k = 1; k < costs.size(); ++k) {
        if (costs[k] < costs[best]) {
            best = k;
        } else if (costs[k] == costs[best]) {
            // |2(k+1) - (n+1)| is twice the distance to the center in
            // sampling intervals; exact in integers.
            const int dk = std::abs(2 * static_cast<int>(k + 1) - (n + 1));
            const int db = std::abs(2 * static_cast<int>(best + 1) - (n + 1));
            if (dk < db) best = k;
        }
    }
    return best;
}

}  // namespace

DirectionalStats directional_consistency(std::span<const Vec2> grads) {
    DirectionSum s;
    for (Vec2 g : grads) s.add(g);
    DirectionalStats out;
    out.count = s.count;
    if (s.count > 0) out.mean = (1.0 / s.count) * s.unit_sum;
    out.kappa = s.kappa();
    return out;
}

DirectionalStats directional_consistency(std::span<const PixelGrad> grads) {
    std::vector<Vec2> v;
    v.reserve(grads.size());
    for (const auto &pg : grads) v.push_back(pg.g);
    return directional_consistency(std::span<const Vec2>(v));
}

std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::Mag3DGS: return "mag3dgs";
        case Criterion::AbsGS: return "absgs";
        case Criterion::DCC: return "dcc";
    }
    return "?";
}

std::string_view to_string(Placement p) {
    switch (p) {
        case Placement::Random: return "random";
        case Placement::SparseArgmin: return "argmin";
        case Placement::DenseArgmin: return "dense";
        case Placement::Regression: return "regression";
    }
    return "?";
}

Criterion parse_criterion(std::string_view s) {
    const std::string v = lower(s);
    if (v == "mag3dgs" || v == "3dgs") return Criterion::Mag3DGS;
    if (v == "absgs" || v == "abs") return Criterion::AbsGS;
    if (v == "dcc" || v == "dc") return Criterion::DCC;
    throw std::invalid_argument("unknown criterion '" + std::string(s) + "' (expected mag3dgs, absgs or dcc)");
}

Placement parse_placement(std::string_view s) {
    const std::string v = lower(s);
    if (v == "random") return Placement::Random;
    if (v == "argmin" || v == "sparseargmin" || v == "sparse") return Placement::SparseArgmin;
    if (v == "dense" || v == "denseargmin") return Placement::DenseArgmin;
    if (v == "regression" || v == "dcs") return Placement::Regression;
    throw std::invalid_argument("unknown placement '" + std::string(s) +
                                "' (expected random, argmin, dense or regression)");
}

void AdcConfig::validate() const {
    auto fail = [](const std::string &what) { throw std::invalid_argument("AdcConfig: " + what); };
    if (n_candidates < 3 || n_candidates % 2 == 0) fail("n_candidates must be odd and >= 3");
    if (!(tau_p > 0.0)) fail("tau_p must be positive");
    if (!(tau_s > 0.0)) fail("tau_s must be positive");
    if (!(prune_opacity >= 0.0)) fail("prune_opacity must be nonnegative");
    if (refine_period < 1) fail("refine_period must be >= 1");
    if (!(densify_until_frac > 0.0) || densify_until_frac > 1.0) fail("densify_until_frac must lie in (0, 1]");
    if (dense_n < 3) fail("dense_n must be >= 3");
    if (!(random_scale_divisor > 0.0)) fail("random_scale_divisor must be positive");
    if (!(cutoff_sigma > 0.0)) fail("cutoff_sigma must be positive");
}

CriterionTerms criterion_terms(std::span<const PixelGrad> grads) {
    DirectionSum s;
    Vec2 total;
    for (const auto &pg : grads) {
        s.add(pg.g);
        total += pg.g;
    }
    CriterionTerms t;
    t.kappa = s.kappa();
    t.abs = norm(s.abs_sum);
    t.dcc = (1.0 - t.kappa) * t.abs;
    t.mag3dgs = norm(total);
    return t;
}

void DensifyAccumulator::accumulate_step(const GaussianSet &set, const GradBuffer &gbuf) {
    for (const auto &entry : gbuf.entries) {
        if (!entry.visible()) continue;
        const std::ptrdiff_t pos = set.find(entry.id);
        if (pos < 0) continue;
        const CriterionTerms t = criterion_terms(entry.pixels);
        AccEntry &acc = entries_[entry.id];
        acc.nu += 1;
        acc.dcc_sum += t.dcc;
        acc.abs_sum += t.abs;
        acc.mag3dgs_sum += t.mag3dgs;
        if (n_split_ > 0) {
            const auto costs = eval_split_costs(set[static_cast<std::size_t>(pos)].g, n_split_, entry.pixels);
            if (acc.split_costs.empty()) acc.split_costs.assign(costs.size(), 0.0);
            for (std::size_t k = 0; k < costs.size(); ++k) acc.split_costs[k] += costs[k];
        }
    }
}

const AccEntry *DensifyAccumulator::find(GaussianId id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

double criterion_value(const AccEntry &e, Criterion c) {
    if (e.nu <= 0) return 0.0;
    switch (c) {
        case Criterion::Mag3DGS: return e.mag3dgs_sum / e.nu;
        case Criterion::AbsGS: return e.abs_sum / e.nu;
        case Criterion::DCC: return e.dcc_sum / e.nu;
    }
    return 0.0;
}

std::vector<double> candidate_positions(int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) x[k - 1] = 0.5 + candidate_offset(k, n) / (n + 1);
    return x;
}

double cost_at(Vec2 x_k, Vec2 x_end, std::span<const PixelGrad> grads) {
    const Vec2 axis = x_end - x_k;
    DirectionSum left, right;
    for (const auto &pg : grads) {
        if (dot(axis, pg.position - x_k) < 0.0)
            left.add(pg.g);
        else
            right.add(pg.g);
    }
    return left.cost() + right.cost();
}

std::vector<double> eval_split_costs(const Gaussian2D &g, int n, std::span<const PixelGrad> grads) {
    std::vector<double> costs(static_cast<std::size_t>(n), 0.0);
    if (grads.empty()) return costs;
    const int a = g.principal_axis();
    const Vec2 p = g.axis_direction(a);
    const double d = 6.0 * g.scale(a);
    const Vec2 x_end = g.mu + (0.5 * d) * p;
    const double delta = d / (n + 1);
    for (int k = 1; k <= n; ++k) {
        const Vec2 x_k = g.mu + (candidate_offset(k, n) * delta) * p;
        costs[k - 1] = cost_at(x_k, x_end, grads);
    }
    return costs;
}

QuadraticFit fit_quadratic(std::span<const double> t, std::span<const double> values) {
    if (t.size() != values.size() || t.size() < 3)
        throw std::invalid_argument("fit_quadratic: need at least 3 matching samples");
    // Normal equations [S0 S1 S2; S1 S2 S3; S2 S3 S4] c = [T0 T1 T2].
    std::array<double, 5> s{};
    std::array<double, 3> r{};
    for (std::size_t i = 0; i < t.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += p;
            if (k < 3) r[k] += p * values[i];
            p *= t[i];
        }
    }
    double m[3][4] = {{s[0], s[1], s[2], r[0]}, {s[1], s[2], s[3], r[1]}, {s[2], s[3], s[4], r[2]}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
        if (m[piv][col] == 0.0) throw std::invalid_argument("fit_quadratic: degenerate sample points");
        if (piv != col)
            for (int k = 0; k < 4; ++k) std::swap(m[col][k], m[piv][k]);
        for (int row = col + 1; row < 3; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
        }
    }
    double c[3];
    for (int row = 2; row >= 0; --row) {
        double acc = m[row][3];
        for (int k = row + 1; k < 3; ++k) acc -= m[row][k] * c[k];
        c[row] = acc / m[row][row];
    }
    return {c[0], c[1], c[2]};
}

double select_x_opt(std::span<const double> costs, Placement placement) {
    const int n = static_cast<int>(costs.size());
    if (n < 1) throw std::invalid_argument("select_x_opt: no candidates");
    if (std::all_of(costs.begin(), costs.end(), [&](double v) { return v == costs[0]; })) return 0.5;

    const std::size_t best = argmin_index(costs);
    const double x_argmin = 0.5 + candidate_offset(static_cast<int>(best) + 1, n) / (n + 1);
    if (placement != Placement::Regression || n < 3) return x_argmin;

    std::vector<double> t(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) t[k - 1] = candidate_offset(k, n);
    const QuadraticFit q = fit_quadratic(t, costs);
    if (!(q.c2 > 0.0)) return x_argmin;
    const double vertex = -q.c1 / (2.0 * q.c2);
    if (!(vertex >= t.front() && vertex <= t.back())) return x_argmin;
    return 0.5 + vertex / (n + 1);
}

SplitPlan plan_split(double x_opt, const Gaussian2D &g, GaussianId parent) {
    if (!(x_opt > 0.0 && x_opt < 1.0)) throw std::invalid_argument("plan_split: x_opt must lie in (0, 1)");
    SplitPlan plan;
    plan.parent = parent;
    plan.x_opt = x_opt;
    plan.axis = g.principal_axis();
    const Vec2 p = g.axis_direction(plan.axis);
    const double s_a = g.scale(plan.axis);
    plan.diameter = 6.0 * s_a;
    const double d_l = plan.diameter * (1.0 - x_opt);
    const double d_r = plan.diameter * x_opt;

    plan.left = g;
    plan.right = g;
    plan.left.mu = g.mu - (0.5 * d_l) * p;
    plan.right.mu = g.mu + (0.5 * d_r) * p;
    const double s_l = s_a * x_opt;
    plan.left.set_scale(plan.axis, s_l);
    plan.right.set_scale(plan.axis, s_a - s_l);
    plan.left.opacity = g.opacity * x_opt;
    plan.right.opacity = g.opacity - plan.left.opacity;
    return plan;
}

std::pair<Gaussian2D, Gaussian2D> split_gaussian(double x_opt, const Gaussian2D &g) {
    SplitPlan plan = plan_split(x_opt, g);
    return {plan.left, plan.right};
}

std::pair<Gaussian2D, Gaussian2D> random_split(const Gaussian2D &g, Rng &rng, double scale_divisor) {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto child = [&] {
        Gaussian2D c = g;
        const double z0 = normal(rng);
        const double z1 = normal(rng);
        c.mu = g.mu + rotate({g.scales.x * z0, g.scales.y * z1}, g.theta);
        c.scales = (1.0 / scale_divisor) * g.scales;
        return c;
    };
    Gaussian2D a = child();
    Gaussian2D b = child();
    return {a, b};
}

std::pair<Gaussian2D, Gaussian2D> split_with_placement(const Gaussian2D &g, const AccEntry *entry,
                                                       const AdcConfig &cfg, Rng &rng) {
    if (cfg.placement == Placement::Random) return random_split(g, rng, cfg.random_scale_divisor);
    double x_opt = 0.5;
    if (entry != nullptr && !entry->split_costs.empty()) x_opt = select_x_opt(entry->split_costs, cfg.placement);
    return split_gaussian(x_opt, g);
}

RefineStats refine(GaussianSet &set, DensifyAccumulator &acc, const AdcConfig &cfg, Rng &rng) {
    RefineStats stats;
    std::vector<Primitive> kept;
    std::vector<Gaussian2D> born;
    kept.reserve(set.size());
    for (const auto &prim : set) {
        const AccEntry *entry = acc.find(prim.id);
        const double value = entry ? criterion_value(*entry, cfg.criterion) : 0.0;
        if (!(value > cfg.tau_p)) {
            kept.push_back(prim);
            continue;
        }
        if (prim.g.max_scale() > cfg.tau_s) {
            auto [l, r] = split_with_placement(prim.g, entry, cfg, rng);
            born.push_back(l);
            born.push_back(r);
            ++stats.split;
        } else {
            kept.push_back(prim);
            born.push_back(prim.g);
            ++stats.cloned;
        }
    }
    set.assign(std::move(kept));
    for (const auto &g : born) set.add(g);

    std::vector<Primitive> survivors;
    survivors.reserve(set.size());
    for (const auto &prim : set) {
        if (prim.g.opacity < cfg.prune_opacity)
            ++stats.pruned;
        else
            survivors.push_back(prim);
    }
    set.assign(std::move(survivors));
    acc.reset();
    return stats;
}

}  // namespace dcgs
