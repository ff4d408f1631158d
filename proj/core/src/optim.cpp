#include "dcgs/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dcgs/metrics.hpp"
#include "dcgs/render.hpp"

namespace dcgs {

void TrainConfig::validate() const {
    auto fail = [](const std::string &what) { throw std::invalid_argument("TrainConfig: " + what); };
    if (total_iters < 1) fail("total_iters must be >= 1");
    for (double r : {lr.mu, lr.scales, lr.theta, lr.intensity, lr.opacity})
        if (!(r >= 0 && std::isfinite(r))) fail("learning rates must be finite and >= 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("adam betas must lie in [0, 1)");
    if (!(epsilon > 0)) fail("epsilon must be positive");
    if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
    adc.validate();
}

bool TrainConfig::is_refine_iteration(int k) const {
    return densify && k > 0 && k % adc.refine_period == 0 &&
           static_cast<double>(k) < adc.densify_until_frac * total_iters;
}

void adam_step(Gaussian2D &g, const ParamGrad &grad, AdamState &st, const TrainConfig &cfg, int channels) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, st.step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, st.step);
    auto update = [&](int slot, double &param, double gr, double lr) {
        double &m = st.m[slot];
        double &v = st.v[slot];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * gr;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * gr * gr;
        param -= lr * (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
    };
    update(0, g.mu.x, grad.mu.x, cfg.lr.mu);
    update(1, g.mu.y, grad.mu.y, cfg.lr.mu);
    update(2, g.scales.x, grad.scales.x, cfg.lr.scales);
    update(3, g.scales.y, grad.scales.y, cfg.lr.scales);
    update(4, g.theta, grad.theta, cfg.lr.theta);
    for (int c = 0; c < channels; ++c) update(5 + c, g.intensity[c], grad.intensity[c], cfg.lr.intensity);
    update(8, g.opacity, grad.opacity, cfg.lr.opacity);

    g.scales.x = std::max(g.scales.x, kMinScale);
    g.scales.y = std::max(g.scales.y, kMinScale);
    g.opacity = std::clamp(g.opacity, kMinOpacity, 1.0);
    for (int c = 0; c < channels; ++c) g.intensity[c] = std::clamp(g.intensity[c], 0.0, 1.0);
    g.theta = canonical_angle(g.theta);
}

void AdamOptimizer::step(GaussianSet &set, const GradBuffer &grads, int channels) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto &prim = set[i];
        adam_step(prim.g, grads.entries[i].dense, states_[prim.id], cfg_, channels);
    }
}

void AdamOptimizer::retain(const GaussianSet &set) {
    std::unordered_map<GaussianId, AdamState> kept;
    for (const auto &p : set) {
        auto it = states_.find(p.id);
        if (it != states_.end()) kept.emplace(p.id, it->second);
    }
    states_ = std::move(kept);
}

const AdamState *AdamOptimizer::state(GaussianId id) const {
    auto it = states_.find(id);
    return it == states_.end() ? nullptr : &it->second;
}

StepEval evaluate(const GaussianSet &set, const Raster &target, double cutoff_sigma) {
    StepEval ev;
    ev.out = render(set, target.dims(), target.channels(), cutoff_sigma);
    ev.loss = loss(ev.out.image, target).total;
    ev.grads = positional_gradients(ev.out, target, set);
    return ev;
}

FitReport fit(const Raster &target, const GaussianSet &init, const TrainConfig &cfg, const RefineHook &hook) {
    cfg.validate();
    if (init.empty()) throw std::invalid_argument("fit: initial set is empty");
    const auto t0 = std::chrono::steady_clock::now();

    FitReport report;
    GaussianSet set = init;
    AdamOptimizer adam(cfg);
    DensifyAccumulator acc(cfg.adc.split_candidates());
    Rng rng(cfg.seed);

    auto checkpoint = [&](int k, const StepEval &ev) {
        report.checkpoints.push_back(
            {k, ev.loss, psnr(ev.out.image, target), ssim(ev.out.image, target), set.size()});
    };

    for (int k = 0; k < cfg.total_iters; ++k) {
        if (cfg.is_refine_iteration(k)) {
            if (hook) hook(k, set, acc);
            const RefineStats rs = refine(set, acc, cfg.adc, rng);
            report.splits += rs.split;
            report.clones += rs.cloned;
            report.prunes += rs.pruned;
            adam.retain(set);
        }
        report.count_trajectory.push_back(set.size());
        StepEval ev = evaluate(set, target, cfg.adc.cutoff_sigma);
        if (!std::isfinite(ev.loss)) {
            report.diverged = true;
            report.diagnostic = "non-finite loss at iteration " + std::to_string(k) + " with " +
                                std::to_string(set.size()) + " primitives";
            break;
        }
        if (k % cfg.checkpoint_every == 0) checkpoint(k, ev);
        if (cfg.densify) acc.accumulate_step(set, ev.grads);
        adam.step(set, ev.grads, target.channels());
    }

    if (!report.diverged) checkpoint(cfg.total_iters, evaluate(set, target, cfg.adc.cutoff_sigma));
    report.final_set = std::move(set);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace dcgs
