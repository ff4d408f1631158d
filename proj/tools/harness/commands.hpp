#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "config.hpp"
#include "dcgs/optim.hpp"
#include "scene.hpp"
#include "toybench.hpp"

namespace dcgs {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `dcgs` tool. Never throws; maps failures to exit codes.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

/// Typed views of a parsed config. Unset keys take library defaults and are
/// recorded for the resolved-config echo.
SceneSpec scene_spec_from(Config &cfg);
TrainConfig train_config_from(Config &cfg);
ToybenchConfig toybench_config_from(Config &cfg);

/// Rejects keys that no command understands.
void check_known_keys(const Config &cfg);

/// Primitive table: id,mu_x,mu_y,scale_0,scale_1,theta,c0,c1,c2,opacity.
void write_gaussians_csv(const std::filesystem::path &path, const GaussianSet &set);
GaussianSet read_gaussians_csv(const std::filesystem::path &path);

struct CliOptions {
    std::string config_path;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> samples;
    std::optional<std::string> mode;
};

int cmd_fit(const CliOptions &opts, std::ostream &out, std::ostream &err);
int cmd_toybench(const CliOptions &opts, std::ostream &out, std::ostream &err);
int cmd_render(const CliOptions &opts, std::ostream &out, std::ostream &err);
int cmd_dcmap(const std::filesystem::path &image, const CliOptions &opts, std::optional<int> radius,
              std::optional<double> floor, std::ostream &out, std::ostream &err);

}  // namespace dcgs
