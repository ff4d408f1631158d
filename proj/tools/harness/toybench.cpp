#include "toybench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "dcgs/metrics.hpp"
#include "dcgs/render.hpp"

namespace dcgs {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool uses(std::span<const Placement> modes, Placement p) {
    return std::find(modes.begin(), modes.end(), p) != modes.end();
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

void ToybenchConfig::validate() const {
    if (samples < 0) throw std::invalid_argument("toybench: samples must be >= 0");
    if (warmup_iters < 1 || refine_iters < 0) throw std::invalid_argument("toybench: iteration counts invalid");
    if (cost_window < 1 || cost_window > warmup_iters)
        throw std::invalid_argument("toybench: cost_window must lie in [1, warmup_iters]");
    if (!(support_frac >= 0.0 && support_frac < 1.0))
        throw std::invalid_argument("toybench: support_frac must lie in [0, 1)");
    if (modes.empty()) throw std::invalid_argument("toybench: no placement modes selected");
    if (jobs < 1) throw std::invalid_argument("toybench: jobs must be >= 1");
    train.validate();
}

std::uint64_t sample_seed(const ToybenchConfig &cfg, int index) {
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
}

BenchRow run_toy_sample(const ToybenchConfig &cfg, int index) {
    BenchRow row;
    row.index = index;
    row.seed = sample_seed(cfg, index);

    SceneSpec spec = cfg.scene;
    spec.seed = row.seed;
    const Raster target = gen_target(spec);
    const TrainConfig &tc = cfg.train;
    const double cutoff = tc.adc.cutoff_sigma;

    // The parent keeps the init geometry through warmup unless asked otherwise;
    // a free single primitive tends to collapse onto one peak.
    GaussianSet set = support_init(target, cfg.support_frac);
    TrainConfig warm = tc;
    if (!cfg.warmup_geometry) warm.lr.mu = warm.lr.scales = warm.lr.theta = 0.0;
    AdamOptimizer adam(warm);
    const bool need_sparse = uses(cfg.modes, Placement::SparseArgmin) || uses(cfg.modes, Placement::Regression);
    const bool need_dense = uses(cfg.modes, Placement::DenseArgmin);
    DensifyAccumulator acc_sparse(tc.adc.n_candidates);
    DensifyAccumulator acc_dense(tc.adc.dense_n);
    const int window_start = cfg.warmup_iters - cfg.cost_window;
    for (int k = 0; k < cfg.warmup_iters; ++k) {
        StepEval ev = evaluate(set, target, cutoff);
        if (k >= window_start) {
            if (need_sparse) acc_sparse.accumulate_step(set, ev.grads);
            if (need_dense) acc_dense.accumulate_step(set, ev.grads);
        }
        adam.step(set, ev.grads, target.channels());
    }
    const Primitive parent = set[0];

    for (Placement mode : cfg.modes) {
        const auto t0 = std::chrono::steady_clock::now();
        AdcConfig adc = tc.adc;
        adc.placement = mode;
        const DensifyAccumulator &acc = mode == Placement::DenseArgmin ? acc_dense : acc_sparse;
        const AccEntry *entry = acc.find(parent.id);
        Rng rng(mix_seed(row.seed, 0x5A17 + static_cast<std::uint64_t>(mode)));

        ModeResult res;
        if (mode != Placement::Random && entry != nullptr && !entry->split_costs.empty())
            res.x_opt = select_x_opt(entry->split_costs, mode);
        const auto [left, right] = split_with_placement(parent.g, entry, adc, rng);

        GaussianSet children;
        children.add(left);
        children.add(right);
        AdamOptimizer opt(tc);
        for (int k = 0; k < cfg.refine_iters; ++k) {
            StepEval ev = evaluate(children, target, cutoff);
            opt.step(children, ev.grads, target.channels());
        }
        const Raster image = render(children, target.dims(), target.channels(), cutoff).image;
        res.ssim = ssim(image, target);
        res.psnr = psnr(image, target);
        res.count = children.size();
        res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        row.modes[static_cast<int>(mode)] = res;
    }
    return row;
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<ModeSummary> summarize(std::span<const BenchRow> rows, std::span<const Placement> modes) {
    // Sort by index so floating-point sums do not depend on row order.
    std::vector<const BenchRow *> ordered;
    for (const auto &r : rows) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](auto *a, auto *b) { return a->index < b->index; });

    std::vector<ModeSummary> out;
    for (Placement mode : modes) {
        ModeSummary s;
        s.mode = mode;
        std::vector<double> v;
        double psnr_sum = 0.0;
        for (const BenchRow *r : ordered) {
            const auto &m = r->mode(mode);
            if (!m) continue;
            v.push_back(m->ssim);
            psnr_sum += m->psnr;
        }
        s.n = v.size();
        if (!v.empty()) {
            double sum = 0.0;
            for (double x : v) sum += x;
            s.ssim_mean = sum / static_cast<double>(v.size());
            s.psnr_mean = psnr_sum / static_cast<double>(v.size());
            std::sort(v.begin(), v.end());
            s.ssim_median = quantile_sorted(v, 0.5);
            s.ssim_q1 = quantile_sorted(v, 0.25);
            s.ssim_q3 = quantile_sorted(v, 0.75);
            s.ssim_iqr = s.ssim_q3 - s.ssim_q1;
        }
        out.push_back(s);
    }
    return out;
}

std::string csv_header(std::span<const Placement> modes) {
    std::string h = "index,seed";
    for (Placement m : modes) {
        const std::string n(to_string(m));
        h += "," + n + "_ssim," + n + "_psnr," + n + "_count," + n + "_xopt";
    }
    return h;
}

std::string csv_row(const BenchRow &row, std::span<const Placement> modes) {
    std::string s = std::to_string(row.index) + "," + std::to_string(row.seed);
    for (Placement m : modes) {
        const auto &r = row.mode(m);
        if (!r) {
            s += ",,,,";
            continue;
        }
        s += "," + fmt_double(r->ssim) + "," + fmt_double(r->psnr) + "," + std::to_string(r->count) + "," +
             fmt_double(r->x_opt);
    }
    return s;
}

std::optional<BenchRow> parse_csv_row(const std::string &line, std::span<const Placement> modes) {
    const auto cells = split_csv(line);
    if (cells.size() != 2 + 4 * modes.size()) return std::nullopt;
    try {
        BenchRow row;
        row.index = std::stoi(cells[0]);
        row.seed = std::stoull(cells[1]);
        for (std::size_t i = 0; i < modes.size(); ++i) {
            ModeResult r;
            r.ssim = std::stod(cells[2 + 4 * i]);
            r.psnr = std::stod(cells[3 + 4 * i]);
            r.count = std::stoul(cells[4 + 4 * i]);
            r.x_opt = std::stod(cells[5 + 4 * i]);
            row.modes[static_cast<int>(modes[i])] = r;
        }
        return row;
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

void write_summary(const std::filesystem::path &path, std::span<const ModeSummary> summary) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "mode,n,ssim_mean,ssim_median,ssim_q1,ssim_q3,ssim_iqr,psnr_mean\n";
    for (const auto &s : summary)
        out << to_string(s.mode) << ',' << s.n << ',' << fmt_double(s.ssim_mean) << ',' << fmt_double(s.ssim_median)
            << ',' << fmt_double(s.ssim_q1) << ',' << fmt_double(s.ssim_q3) << ',' << fmt_double(s.ssim_iqr) << ','
            << fmt_double(s.psnr_mean) << '\n';
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<BenchRow> run_toybench(const ToybenchConfig &cfg, const ToybenchFiles &files,
                                   const std::function<void(int, int)> &progress) {
    cfg.validate();
    const std::string header = csv_header(cfg.modes);

    // Resume from rows already on disk when the layout matches.
    std::map<int, BenchRow> done;
    {
        std::ifstream in(files.rows);
        std::string line;
        if (in && std::getline(in, line) && line == header) {
            while (std::getline(in, line)) {
                auto row = parse_csv_row(line, cfg.modes);
                if (row && row->index >= 0 && row->index < cfg.samples && row->seed == sample_seed(cfg, row->index))
                    done.emplace(row->index, *row);
            }
        }
    }

    std::vector<int> pending;
    for (int i = 0; i < cfg.samples; ++i)
        if (!done.count(i)) pending.push_back(i);

    {
        // Rewrite what survived the resume check so the file stays well formed.
        std::ofstream out(files.rows, std::ios::trunc);
        if (!out) throw std::runtime_error(files.rows.string() + ": cannot open for writing");
        out << header << '\n';
        for (const auto &[i, row] : done) out << csv_row(row, cfg.modes) << '\n';
    }
    const bool timing_exists = std::filesystem::exists(files.timing) && !done.empty();
    std::ofstream rows_out(files.rows, std::ios::app);
    std::ofstream timing_out(files.timing, timing_exists ? std::ios::app : std::ios::trunc);
    if (!rows_out || !timing_out) throw std::runtime_error("toybench: cannot open output files");
    if (!timing_exists) {
        timing_out << "index";
        for (Placement m : cfg.modes) timing_out << ',' << to_string(m) << "_ms";
        timing_out << '\n';
    }

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    int finished = static_cast<int>(done.size());
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= pending.size()) return;
            BenchRow row;
            try {
                row = run_toy_sample(cfg, pending[k]);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = pending.size();
                return;
            }
            std::lock_guard lock(mu);
            rows_out << csv_row(row, cfg.modes) << '\n' << std::flush;
            timing_out << row.index;
            for (Placement m : cfg.modes) timing_out << ',' << fmt_double(row.mode(m)->wall_ms);
            timing_out << '\n' << std::flush;
            done.emplace(row.index, row);
            ++finished;
            if (progress) progress(finished, cfg.samples);
        }
    };
    const int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(pending.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    rows_out.close();
    timing_out.close();
    if (failure) std::rethrow_exception(failure);

    std::vector<BenchRow> rows;
    rows.reserve(done.size());
    for (auto &[i, row] : done) rows.push_back(row);

    const auto tmp = std::filesystem::path(files.rows.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << header << '\n';
        for (const auto &row : rows) out << csv_row(row, cfg.modes) << '\n';
        if (!out) throw std::runtime_error(tmp.string() + ": write failed");
    }
    std::filesystem::rename(tmp, files.rows);
    write_summary(files.summary, summarize(rows, cfg.modes));
    return rows;
}

}  // namespace dcgs
