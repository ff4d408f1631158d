#pragma once

/// Adaptive density control driven by the directional consistency of
/// per-pixel positional gradients.
///
/// Over a refinement window each visible primitive accumulates three split
/// criteria (mean gradient magnitude, homodirectional magnitude, and the
/// consistency-weighted homodirectional magnitude) plus the costs of a fixed
/// set of candidate cut positions along its principal axis. At a refinement
/// step the selected criterion decides between split, clone and nothing; the
/// candidate costs decide where a split cuts.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dcgs/core.hpp"
#include "dcgs/grad.hpp"

namespace dcgs {

using Rng = std::mt19937_64;

struct DirectionalStats {
    Vec2 mean;           // circular mean of the unit directions
    double kappa = 1.0;  // |mean|, clamped to [0, 1]
    int count = 0;       // number of nonzero vectors used
};

/// Circular mean of the directions of `grads`. Zero vectors carry no
/// direction and are skipped; an empty (or all-zero) input gives kappa = 1.
DirectionalStats directional_consistency(std::span<const Vec2> grads);
DirectionalStats directional_consistency(std::span<const PixelGrad> grads);

enum class Criterion { Mag3DGS, AbsGS, DCC };
enum class Placement { Random, SparseArgmin, DenseArgmin, Regression };

std::string_view to_string(Criterion c);
std::string_view to_string(Placement p);
/// Parse helpers; accept the names produced by to_string (case-insensitive)
/// plus the short CLI spellings. Throw std::invalid_argument.
Criterion parse_criterion(std::string_view s);
Placement parse_placement(std::string_view s);

struct AdcConfig {
    double tau_p = 1.0;            // criterion threshold
    double tau_s = 2.0;            // scale threshold, pixels
    double prune_opacity = 0.005;  // primitives below this opacity are removed
    int refine_period = 100;       // steps between refinements
    double densify_until_frac = 0.5;
    int n_candidates = 5;  // odd, >= 3
    Criterion criterion = Criterion::DCC;
    Placement placement = Placement::Regression;
    int dense_n = 60;
    double random_scale_divisor = 1.6;
    double cutoff_sigma = kDefaultCutoffSigma;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;

    /// Candidate count the accumulator should track for this placement.
    int split_candidates() const { return placement == Placement::DenseArgmin ? dense_n : n_candidates; }
};

/// Running sums of one primitive over the current refinement window.
struct AccEntry {
    int nu = 0;
    double dcc_sum = 0.0;
    double mag3dgs_sum = 0.0;
    double abs_sum = 0.0;
    std::vector<double> split_costs;
};

/// One step's criterion increments for a single primitive.
struct CriterionTerms {
    double dcc = 0.0;
    double mag3dgs = 0.0;
    double abs = 0.0;
    double kappa = 1.0;
};

CriterionTerms criterion_terms(std::span<const PixelGrad> grads);

class DensifyAccumulator {
public:
    /// `n_split` candidates are costed per visible primitive per step; 0
    /// disables split-cost tracking.
    explicit DensifyAccumulator(int n_split = 5) : n_split_(n_split) {}

    /// Adds one training step. Primitives with an empty footprint are left
    /// untouched.
    void accumulate_step(const GaussianSet &set, const GradBuffer &gbuf);

    /// Entry for `id`, or nullptr if it was never visible in this window.
    const AccEntry *find(GaussianId id) const;

    void reset() { entries_.clear(); }
    int n_split() const { return n_split_; }
    std::size_t size() const { return entries_.size(); }

private:
    int n_split_;
    std::unordered_map<GaussianId, AccEntry> entries_;
};

/// Window average of the selected running sum; 0 when nu == 0.
double criterion_value(const AccEntry &e, Criterion c);

/// Normalized positions of n candidates along the 3-sigma principal segment:
/// k / (n + 1) for k = 1..n. For odd n this is 0.5 + i / (n + 1), i = -K..K.
std::vector<double> candidate_positions(int n);

/// Cost of cutting at `x_k`, with the principal axis pointing towards
/// `x_end`. Pixels with (x_end - x_k) . (x - x_k) < 0 go left, the rest right;
/// each side costs (1 - kappa) * |sum of |g||.
double cost_at(Vec2 x_k, Vec2 x_end, std::span<const PixelGrad> grads);

/// Costs of the n candidate cuts along the principal axis of g, in
/// ascending candidate order. Zero vector for an empty gradient list.
std::vector<double> eval_split_costs(const Gaussian2D &g, int n, std::span<const PixelGrad> grads);

/// Picks the cut position from window-accumulated candidate costs.
/// Argmin placements break ties towards 0.5, then towards the lower index;
/// Regression fits a least-squares quadratic and takes its vertex when the
/// fit opens upward with the vertex inside the sampled range, otherwise it
/// falls back to the argmin. All-equal costs give 0.5.
double select_x_opt(std::span<const double> costs, Placement placement);

/// Least-squares quadratic J(t) = c0 + c1 t + c2 t^2 over the sample points.
struct QuadraticFit {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};
QuadraticFit fit_quadratic(std::span<const double> t, std::span<const double> values);

/// Sub-primitive layout for a cut at x_opt along the principal axis.
struct SplitPlan {
    GaussianId parent = 0;
    double x_opt = 0.5;
    int axis = 0;
    double diameter = 0.0;
    Gaussian2D left;
    Gaussian2D right;
};

SplitPlan plan_split(double x_opt, const Gaussian2D &g, GaussianId parent = 0);

/// Cuts the parent's 3-sigma principal segment at fraction x_opt from its
/// negative end. Opacity and the principal scale are shared in the ratio
/// x_opt : 1 - x_opt; everything else is copied.
std::pair<Gaussian2D, Gaussian2D> split_gaussian(double x_opt, const Gaussian2D &g);

/// Baseline split: two children centered at draws from the parent density,
/// scales divided by `scale_divisor`, opacity copied.
std::pair<Gaussian2D, Gaussian2D> random_split(const Gaussian2D &g, Rng &rng, double scale_divisor = 1.6);

struct RefineStats {
    int cloned = 0;
    int split = 0;
    int pruned = 0;
};

/// Split of a single primitive with the configured placement. Uses the
/// accumulated candidate costs unless placement is Random.
std::pair<Gaussian2D, Gaussian2D> split_with_placement(const Gaussian2D &g, const AccEntry *entry,
                                                       const AdcConfig &cfg, Rng &rng);

/// One refinement: split or clone every primitive whose criterion exceeds
/// tau_p, prune low-opacity primitives, then reset the accumulator.
/// Children are appended after the surviving primitives in parent order.
RefineStats refine(GaussianSet &set, DensifyAccumulator &acc, const AdcConfig &cfg, Rng &rng);

}  // namespace dcgs
