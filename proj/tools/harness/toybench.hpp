#pragma once

/// Randomized single-split benchmark: one primitive fitted to a two-peak
/// target is split once by each placement mode from the same trained state,
/// then refined, and the result is scored.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcgs/adc.hpp"
#include "dcgs/optim.hpp"
#include "scene.hpp"

namespace dcgs {

inline constexpr std::array<Placement, 4> kAllPlacements = {Placement::Random, Placement::SparseArgmin,
                                                            Placement::DenseArgmin, Placement::Regression};

struct ToybenchConfig {
    SceneSpec scene;  // seed is replaced per sample
    int samples = 1000;
    int warmup_iters = 300;
    int refine_iters = 300;
    int cost_window = 100;  // trailing warmup steps whose split costs are accumulated
    double support_frac = 0.1;     // initial primitive covers pixels above this fraction of the peak
    bool warmup_geometry = false;  // false: warmup fits opacity and intensity only
    std::vector<Placement> modes{kAllPlacements.begin(), kAllPlacements.end()};
    int jobs = 1;
    std::uint64_t seed = 0;
    TrainConfig train;  // learning rates, Adam constants, n_candidates, dense_n

    void validate() const;
};

struct ModeResult {
    double ssim = 0.0;
    double psnr = 0.0;
    std::size_t count = 0;
    double x_opt = 0.5;  // chosen cut; 0.5 for random placement
    double wall_ms = 0.0;
};

struct BenchRow {
    int index = 0;
    std::uint64_t seed = 0;
    std::array<std::optional<ModeResult>, 4> modes;  // indexed by Placement

    const std::optional<ModeResult> &mode(Placement p) const { return modes[static_cast<int>(p)]; }
};

std::uint64_t sample_seed(const ToybenchConfig &cfg, int index);

/// Runs one sample. Depends only on (cfg, index).
BenchRow run_toy_sample(const ToybenchConfig &cfg, int index);

struct ModeSummary {
    Placement mode = Placement::Random;
    std::size_t n = 0;
    double ssim_mean = 0.0;
    double ssim_median = 0.0;
    double ssim_q1 = 0.0;
    double ssim_q3 = 0.0;
    double ssim_iqr = 0.0;
    double psnr_mean = 0.0;
};

/// Linear-interpolated quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double q);

/// Order-independent per-mode statistics.
std::vector<ModeSummary> summarize(std::span<const BenchRow> rows, std::span<const Placement> modes);

std::string csv_header(std::span<const Placement> modes);
std::string csv_row(const BenchRow &row, std::span<const Placement> modes);
/// Parses a row written by csv_row; std::nullopt if it does not fit `modes`.
std::optional<BenchRow> parse_csv_row(const std::string &line, std::span<const Placement> modes);

struct ToybenchFiles {
    std::filesystem::path rows;     // deterministic results, one row per sample
    std::filesystem::path timing;   // per-sample wall times
    std::filesystem::path summary;  // per-mode statistics
};

/// Runs every sample not already present in files.rows, appending and
/// flushing each finished row, then rewrites the rows file sorted by index
/// and writes the summary. Returns all rows sorted by index.
std::vector<BenchRow> run_toybench(const ToybenchConfig &cfg, const ToybenchFiles &files,
                                   const std::function<void(int done, int total)> &progress = {});

void write_summary(const std::filesystem::path &path, std::span<const ModeSummary> summary);

}  // namespace dcgs
