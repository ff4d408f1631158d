#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcgs/adc.hpp"
#include "dcgs/core.hpp"
#include "dcgs/grad.hpp"

namespace dcgs {

/// Per-group Adam step sizes. A zero rate freezes the group.
struct LearningRates {
    double mu = 2e-2;
    double scales = 5e-3;
    double theta = 1e-3;
    double intensity = 1e-2;
    double opacity = 5e-2;
};

inline constexpr double kMinScale = 1e-3;
inline constexpr double kMinOpacity = 1e-4;

struct TrainConfig {
    int total_iters = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    LearningRates lr;
    AdcConfig adc;
    bool densify = true;
    int checkpoint_every = 100;
    std::uint64_t seed = 0;

    void validate() const;

    /// Refinement happens at iterations k > 0 with k % refine_period == 0
    /// and k < densify_until_frac * total_iters.
    bool is_refine_iteration(int k) const;
};

/// Adam moments for one primitive, laid out as mu(2) scales(2) theta(1)
/// intensity(3) opacity(1).
struct AdamState {
    static constexpr int kSize = 9;
    std::array<double, kSize> m{};
    std::array<double, kSize> v{};
    int step = 0;
};

/// One Adam update of a single primitive, followed by projection onto the
/// parameter domain (scales >= kMinScale, opacity in [kMinOpacity, 1],
/// intensity in [0, 1], theta in [0, pi)). Bias correction uses the
/// primitive's own step count.
void adam_step(Gaussian2D &g, const ParamGrad &grad, AdamState &state, const TrainConfig &cfg, int channels);

/// Moments keyed by primitive id. Primitives without an entry start from
/// zero moments; entries of removed primitives are dropped.
class AdamOptimizer {
public:
    explicit AdamOptimizer(const TrainConfig &cfg) : cfg_(cfg) {}

    void step(GaussianSet &set, const GradBuffer &grads, int channels);
    void retain(const GaussianSet &set);

    const AdamState *state(GaussianId id) const;

private:
    TrainConfig cfg_;
    std::unordered_map<GaussianId, AdamState> states_;
};

struct Checkpoint {
    int iteration = 0;
    double loss = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::size_t count = 0;
};

struct FitReport {
    std::vector<Checkpoint> checkpoints;
    std::vector<std::size_t> count_trajectory;  // count before each step
    GaussianSet final_set;
    double wall_seconds = 0.0;
    bool diverged = false;
    std::string diagnostic;
    int splits = 0;
    int clones = 0;
    int prunes = 0;
};

/// Called at a refinement iteration, before refine() mutates the set.
using RefineHook = std::function<void(int iteration, const GaussianSet &, const DensifyAccumulator &)>;

/// Runs cfg.total_iters Adam steps from `init`. Every step feeds the
/// accumulator; refinement runs on the schedule of cfg.is_refine_iteration.
/// A non-finite loss stops the run and sets `diverged`.
FitReport fit(const Raster &target, const GaussianSet &init, const TrainConfig &cfg,
              const RefineHook &hook = {});

/// Forward pass, loss and gradients in one go.
struct StepEval {
    RenderOutput out;
    double loss = 0.0;
    GradBuffer grads;
};
StepEval evaluate(const GaussianSet &set, const Raster &target, double cutoff_sigma = kDefaultCutoffSigma);

}  // namespace dcgs
