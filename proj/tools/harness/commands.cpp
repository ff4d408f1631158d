#include "commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dcgs/metrics.hpp"
#include "dcgs/render.hpp"
#include "ppm.hpp"

namespace dcgs {

namespace {

const std::set<std::string> kKnownKeys = {
    "run.id",
    "scene.kind", "scene.width", "scene.height", "scene.channels", "scene.k", "scene.seed",
    "scene.sigma_min", "scene.sigma_max", "scene.amp_min", "scene.amp_max", "scene.sep_factor",
    "scene.sep_extra", "scene.center_jitter",
    "init.kind", "init.cells_x", "init.cells_y",
    "train.total_iters", "train.beta1", "train.beta2", "train.epsilon", "train.lr_mu", "train.lr_scales",
    "train.lr_theta", "train.lr_intensity", "train.lr_opacity", "train.densify", "train.checkpoint_every",
    "train.seed",
    "adc.tau_p", "adc.tau_s", "adc.prune_opacity", "adc.refine_period", "adc.densify_until_frac",
    "adc.n_candidates", "adc.criterion", "adc.placement", "adc.dense_n", "adc.random_scale_divisor",
    "adc.cutoff_sigma",
    "toybench.samples", "toybench.warmup_iters", "toybench.refine_iters", "toybench.cost_window",
    "toybench.support_frac", "toybench.warmup_geometry", "toybench.modes", "toybench.jobs", "toybench.seed",
    "dcmap.window_radius", "dcmap.mag_floor", "dcmap.min_samples",
    "render.gaussians",
};

std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

Config load_config(const CliOptions &opts) {
    if (opts.config_path.empty()) {
        std::istringstream empty;
        return Config::parse(empty, "<defaults>");
    }
    return Config::load(opts.config_path);
}

void apply_overrides(Config &cfg, const CliOptions &opts, const std::string &seed_key) {
    if (opts.seed) cfg.set(seed_key, std::to_string(*opts.seed));
    if (opts.jobs) cfg.set("toybench.jobs", std::to_string(*opts.jobs));
    if (opts.samples) cfg.set("toybench.samples", std::to_string(*opts.samples));
}

std::vector<Placement> parse_modes(const std::string &s) {
    if (s == "all") return {kAllPlacements.begin(), kAllPlacements.end()};
    std::vector<Placement> modes;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        const Placement p = parse_placement(item.substr(b, e - b + 1));
        if (std::find(modes.begin(), modes.end(), p) == modes.end()) modes.push_back(p);
    }
    if (modes.empty()) throw std::invalid_argument("no placement modes given");
    return modes;
}

template <class F>
auto typed(Config &cfg, const std::string &key, F &&parse) {
    try {
        return parse();
    } catch (const ConfigError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        cfg.fail(key, e.what());
    }
}

void ensure_dir(const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error(dir.string() + ": cannot create output directory: " + ec.message());
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

GaussianSet make_init(Config &cfg, const Raster &target) {
    const std::string kind = cfg.get_string("init.kind", "moment");
    if (kind == "moment") return moment_init(target);
    if (kind == "grid") return grid_init(target, cfg.get_int("init.cells_x", 4), cfg.get_int("init.cells_y", 4));
    cfg.fail("init.kind", "expected 'moment' or 'grid', got '" + kind + "'");
}

// Runs `body`, mapping exceptions to exit codes.
template <class F>
int guarded(std::ostream &err, F &&body) {
    try {
        return body();
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument &e) {
        err << "invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

void check_known_keys(const Config &cfg) { cfg.require_known(kKnownKeys); }

SceneSpec scene_spec_from(Config &cfg) {
    SceneSpec s;
    const std::string kind = cfg.get_string("scene.kind", "two_peak");
    s.kind = typed(cfg, "scene.kind", [&] { return parse_scene_kind(kind); });
    s.dims.width = cfg.get_int("scene.width", 32);
    s.dims.height = cfg.get_int("scene.height", 32);
    s.channels = cfg.get_int("scene.channels", 1);
    s.k = cfg.get_int("scene.k", 2);
    s.seed = cfg.get_u64("scene.seed", 0);
    s.ranges.sigma_min = cfg.get_double("scene.sigma_min", s.ranges.sigma_min);
    s.ranges.sigma_max = cfg.get_double("scene.sigma_max", s.ranges.sigma_max);
    s.ranges.amp_min = cfg.get_double("scene.amp_min", s.ranges.amp_min);
    s.ranges.amp_max = cfg.get_double("scene.amp_max", s.ranges.amp_max);
    s.ranges.sep_factor = cfg.get_double("scene.sep_factor", s.ranges.sep_factor);
    s.ranges.sep_extra = cfg.get_double("scene.sep_extra", s.ranges.sep_extra);
    s.ranges.center_jitter = cfg.get_double("scene.center_jitter", s.ranges.center_jitter);
    if (s.dims.width <= 0) cfg.fail("scene.width", "must be positive");
    if (s.dims.height <= 0) cfg.fail("scene.height", "must be positive");
    if (s.channels != 1 && s.channels != 3) cfg.fail("scene.channels", "must be 1 or 3");
    if (!(s.ranges.sigma_min > 0) || s.ranges.sigma_max < s.ranges.sigma_min)
        cfg.fail("scene.sigma_max", "sigma range must satisfy 0 < sigma_min <= sigma_max");
    return s;
}

TrainConfig train_config_from(Config &cfg) {
    TrainConfig t;
    t.total_iters = cfg.get_int("train.total_iters", t.total_iters);
    t.beta1 = cfg.get_double("train.beta1", t.beta1);
    t.beta2 = cfg.get_double("train.beta2", t.beta2);
    t.epsilon = cfg.get_double("train.epsilon", t.epsilon);
    t.lr.mu = cfg.get_double("train.lr_mu", t.lr.mu);
    t.lr.scales = cfg.get_double("train.lr_scales", t.lr.scales);
    t.lr.theta = cfg.get_double("train.lr_theta", t.lr.theta);
    t.lr.intensity = cfg.get_double("train.lr_intensity", t.lr.intensity);
    t.lr.opacity = cfg.get_double("train.lr_opacity", t.lr.opacity);
    t.densify = cfg.get_bool("train.densify", t.densify);
    t.checkpoint_every = cfg.get_int("train.checkpoint_every", t.checkpoint_every);
    t.seed = cfg.get_u64("train.seed", t.seed);

    AdcConfig &a = t.adc;
    a.tau_p = cfg.get_double("adc.tau_p", a.tau_p);
    a.tau_s = cfg.get_double("adc.tau_s", a.tau_s);
    a.prune_opacity = cfg.get_double("adc.prune_opacity", a.prune_opacity);
    a.refine_period = cfg.get_int("adc.refine_period", a.refine_period);
    a.densify_until_frac = cfg.get_double("adc.densify_until_frac", a.densify_until_frac);
    a.n_candidates = cfg.get_int("adc.n_candidates", a.n_candidates);
    const std::string crit = cfg.get_string("adc.criterion", std::string(to_string(a.criterion)));
    a.criterion = typed(cfg, "adc.criterion", [&] { return parse_criterion(crit); });
    const std::string place = cfg.get_string("adc.placement", std::string(to_string(a.placement)));
    a.placement = typed(cfg, "adc.placement", [&] { return parse_placement(place); });
    a.dense_n = cfg.get_int("adc.dense_n", a.dense_n);
    a.random_scale_divisor = cfg.get_double("adc.random_scale_divisor", a.random_scale_divisor);
    a.cutoff_sigma = cfg.get_double("adc.cutoff_sigma", a.cutoff_sigma);
    typed(cfg, "adc", [&] {
        t.validate();
        return 0;
    });
    return t;
}

ToybenchConfig toybench_config_from(Config &cfg) {
    ToybenchConfig tb;
    tb.scene = scene_spec_from(cfg);
    tb.train = train_config_from(cfg);
    tb.samples = cfg.get_int("toybench.samples", tb.samples);
    tb.warmup_iters = cfg.get_int("toybench.warmup_iters", tb.warmup_iters);
    tb.refine_iters = cfg.get_int("toybench.refine_iters", tb.refine_iters);
    tb.cost_window = cfg.get_int("toybench.cost_window", tb.cost_window);
    tb.support_frac = cfg.get_double("toybench.support_frac", tb.support_frac);
    tb.warmup_geometry = cfg.get_bool("toybench.warmup_geometry", tb.warmup_geometry);
    const std::string modes = cfg.get_string("toybench.modes", "all");
    tb.modes = typed(cfg, "toybench.modes", [&] { return parse_modes(modes); });
    tb.jobs = cfg.get_int("toybench.jobs", tb.jobs);
    tb.seed = cfg.get_u64("toybench.seed", tb.seed);
    typed(cfg, "toybench", [&] {
        tb.validate();
        return 0;
    });
    return tb;
}

void write_gaussians_csv(const std::filesystem::path &path, const GaussianSet &set) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "id,mu_x,mu_y,scale_0,scale_1,theta,c0,c1,c2,opacity\n";
    for (const auto &[id, g] : set)
        out << id << ',' << fmt17(g.mu.x) << ',' << fmt17(g.mu.y) << ',' << fmt17(g.scales.x) << ','
            << fmt17(g.scales.y) << ',' << fmt17(g.theta) << ',' << fmt17(g.intensity[0]) << ','
            << fmt17(g.intensity[1]) << ',' << fmt17(g.intensity[2]) << ',' << fmt17(g.opacity) << '\n';
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

GaussianSet read_gaussians_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    std::string line;
    std::getline(in, line);
    std::vector<Primitive> items;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        GaussianId id = 0;
        try {
            std::getline(ss, cell, ',');
            id = std::stoull(cell);
            while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        } catch (const std::exception &) {
            v.clear();
        }
        if (v.size() != 9) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        try {
            items.push_back({id, Gaussian2D::make({v[0], v[1]}, {v[2], v[3]}, v[4], {v[5], v[6], v[7]}, v[8])});
        } catch (const std::invalid_argument &e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    GaussianSet set;
    set.assign(std::move(items));
    return set;
}

int cmd_fit(const CliOptions &opts, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        Config cfg = load_config(opts);
        apply_overrides(cfg, opts, "train.seed");
        if (opts.seed) cfg.set("scene.seed", std::to_string(*opts.seed));
        if (opts.mode && *opts.mode != "all") cfg.set("adc.placement", *opts.mode);
        check_known_keys(cfg);
        const std::string run_id = cfg.get_string("run.id", "fit");
        const SceneSpec spec = scene_spec_from(cfg);
        const TrainConfig train = train_config_from(cfg);
        const Raster target = gen_target(spec);
        const GaussianSet init = make_init(cfg, target);

        ensure_dir(opts.out_dir);
        const auto base = opts.out_dir / run_id;
        write_text(base.string() + "_config.txt", cfg.dump_resolved());
        out << cfg.dump_resolved() << '\n';

        const FitReport report = fit(target, init, train);

        std::ostringstream table;
        table << "iteration,loss,psnr,ssim,count\n";
        for (const auto &c : report.checkpoints)
            table << c.iteration << ',' << fmt17(c.loss) << ',' << fmt17(c.psnr) << ',' << fmt17(c.ssim) << ','
                  << c.count << '\n';
        write_text(base.string() + "_report.csv", table.str());
        write_gaussians_csv(base.string() + "_gaussians.csv", report.final_set);

        const Raster image = render(report.final_set, target.dims(), target.channels(), train.adc.cutoff_sigma).image;
        Raster residual(target.width(), target.height(), target.channels());
        for (std::size_t i = 0; i < residual.size(); ++i)
            residual.data()[i] = 0.5 + 0.5 * (image.data()[i] - target.data()[i]);
        write_ppm(base.string() + "_target.ppm", target);
        write_ppm(base.string() + "_render.ppm", image);
        write_ppm(base.string() + "_residual.ppm", residual);

        if (report.diverged) {
            err << "fit diverged: " << report.diagnostic << '\n';
            return static_cast<int>(kExitRuntime);
        }
        const Checkpoint &last = report.checkpoints.back();
        out << "final: loss=" << last.loss << " psnr=" << last.psnr << " ssim=" << last.ssim
            << " count=" << last.count << " splits=" << report.splits << " clones=" << report.clones
            << " prunes=" << report.prunes << " wall_s=" << report.wall_seconds << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_toybench(const CliOptions &opts, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        Config cfg = load_config(opts);
        apply_overrides(cfg, opts, "toybench.seed");
        if (opts.mode) cfg.set("toybench.modes", *opts.mode);
        check_known_keys(cfg);
        const std::string run_id = cfg.get_string("run.id", "toybench");
        const ToybenchConfig tb = toybench_config_from(cfg);

        ensure_dir(opts.out_dir);
        const auto base = opts.out_dir / run_id;
        write_text(base.string() + "_config.txt", cfg.dump_resolved());
        const ToybenchFiles files{base.string() + "_rows.csv", base.string() + "_timing.csv",
                                  base.string() + "_summary.csv"};
        const auto rows = run_toybench(tb, files);
        const auto summary = summarize(rows, tb.modes);
        out << "mode        n      ssim_mean  ssim_median  ssim_iqr   psnr_mean\n";
        for (const auto &s : summary)
            out << std::left << std::setw(11) << to_string(s.mode) << ' ' << std::setw(6) << s.n << ' '
                << std::fixed << std::setprecision(5) << std::setw(10) << s.ssim_mean << ' ' << std::setw(12)
                << s.ssim_median << ' ' << std::setw(10) << s.ssim_iqr << ' ' << std::setprecision(3)
                << s.psnr_mean << '\n';
        out.unsetf(std::ios::fixed);
        out << "rows: " << files.rows.string() << "\nsummary: " << files.summary.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_render(const CliOptions &opts, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        Config cfg = load_config(opts);
        apply_overrides(cfg, opts, "scene.seed");
        check_known_keys(cfg);
        const std::string run_id = cfg.get_string("run.id", "render");
        const SceneSpec spec = scene_spec_from(cfg);
        const double cutoff = cfg.get_double("adc.cutoff_sigma", kDefaultCutoffSigma);
        const std::string gaussians = cfg.get_string("render.gaussians", "");

        ensure_dir(opts.out_dir);
        const auto base = opts.out_dir / run_id;
        const Raster target = gen_target(spec);
        write_ppm(base.string() + "_target.ppm", target);
        out << "wrote " << base.string() << "_target.ppm\n";
        if (!gaussians.empty()) {
            const GaussianSet set = read_gaussians_csv(gaussians);
            const Raster image = render(set, spec.dims, spec.channels, cutoff).image;
            write_ppm(base.string() + "_render.ppm", image);
            out << "wrote " << base.string() << "_render.ppm (" << set.size() << " primitives, psnr "
                << psnr(image, target) << " dB vs target)\n";
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_dcmap(const std::filesystem::path &image_path, const CliOptions &opts, std::optional<int> radius,
              std::optional<double> floor, std::ostream &out, std::ostream &err) {
    Raster image;
    try {
        image = read_ppm(image_path);
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return guarded(err, [&] {
        Config cfg = load_config(opts);
        if (radius) cfg.set("dcmap.window_radius", std::to_string(*radius));
        if (floor) cfg.set("dcmap.mag_floor", fmt17(*floor));
        check_known_keys(cfg);
        DcMapParams p;
        p.window_radius = cfg.get_int("dcmap.window_radius", p.window_radius);
        p.mag_floor = cfg.get_double("dcmap.mag_floor", p.mag_floor);
        p.min_samples = cfg.get_int("dcmap.min_samples", p.min_samples);
        if (p.window_radius < 0) cfg.fail("dcmap.window_radius", "must be >= 0");

        const DcMap map = dc_map(image, p);
        Raster kappa(map.dims.width, map.dims.height, 1);
        Raster mask(map.dims.width, map.dims.height, 1);
        double sum = 0.0;
        int unmasked = 0;
        for (std::size_t i = 0; i < map.kappa.size(); ++i) {
            if (map.mask[i]) {
                mask.data()[i] = 1.0;
                continue;
            }
            kappa.data()[i] = map.kappa[i];
            sum += map.kappa[i];
            ++unmasked;
        }
        ensure_dir(opts.out_dir);
        const std::string stem = image_path.stem().string();
        write_ppm(opts.out_dir / (stem + "_dc.ppm"), kappa);
        write_ppm(opts.out_dir / (stem + "_dc_mask.ppm"), mask);
        out << "unmasked pixels: " << unmasked << " of " << map.kappa.size()
            << ", mean kappa: " << (unmasked ? sum / unmasked : 0.0) << '\n';
        return static_cast<int>(kExitOk);
    });
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"2D Gaussian splatting fits with directional-consistency density control", "dcgs"};
    app.require_subcommand(1);

    CliOptions opts;
    std::uint64_t seed = 0;
    int jobs = 1, samples = 0;
    std::string mode;
    std::string image;
    int radius = 0;
    double floor = 0.0;

    auto add_common = [&](CLI::App *sub, bool needs_config) {
        auto *c = sub->add_option("--config", opts.config_path, "Config file (key = value with [sections])");
        if (needs_config) c->required();
        sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", seed, "Override the seed");
    };

    auto *fit_cmd = app.add_subcommand("fit", "Fit a synthetic scene and write renders and a report");
    add_common(fit_cmd, true);
    fit_cmd->add_option("--mode", mode, "Split placement")
        ->check(CLI::IsMember({"random", "argmin", "dense", "regression", "all"}));

    auto *bench_cmd = app.add_subcommand("toybench", "Randomized single-split placement benchmark");
    add_common(bench_cmd, false);
    bench_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--samples", samples, "Number of samples")->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--mode", mode, "Placement mode(s)")
        ->check(CLI::IsMember({"random", "argmin", "dense", "regression", "all"}));

    auto *dc_cmd = app.add_subcommand("dcmap", "Per-pixel directional consistency of an image");
    dc_cmd->add_option("image", image, "Input P5/P6 image")->required();
    dc_cmd->add_option("--config", opts.config_path, "Config file");
    dc_cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
    dc_cmd->add_option("--radius", radius, "Window radius in pixels")->check(CLI::NonNegativeNumber);
    dc_cmd->add_option("--floor", floor, "Gradient magnitude floor");

    auto *render_cmd = app.add_subcommand("render", "Render a scene target and optionally a saved primitive set");
    add_common(render_cmd, false);

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << e.what() << '\n' << "run with --help for usage\n";
        return kExitUsage;
    }

    auto *active = app.get_subcommands().front();
    if (const auto *o = active->get_option_no_throw("--seed"); o && o->count()) opts.seed = seed;
    if (active == bench_cmd) {
        if (bench_cmd->count("--jobs")) opts.jobs = jobs;
        if (bench_cmd->count("--samples")) opts.samples = samples;
    }
    if (!mode.empty()) opts.mode = mode;

    if (active == fit_cmd) return cmd_fit(opts, out, err);
    if (active == bench_cmd) return cmd_toybench(opts, out, err);
    if (active == render_cmd) return cmd_render(opts, out, err);
    return cmd_dcmap(image, opts,
                     dc_cmd->count("--radius") ? std::optional<int>(radius) : std::nullopt,
                     dc_cmd->count("--floor") ? std::optional<double>(floor) : std::nullopt, out, err);
}

}  // namespace dcgs
