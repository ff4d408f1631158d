#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

#include "dcgs/adc.hpp"
#include "dcgs/grad.hpp"
#include "dcgs/metrics.hpp"
#include "dcgs/render.hpp"

using namespace dcgs;

namespace {

GaussianSet random_set(int n, RasterDims dims, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> px(0.0, dims.width), py(0.0, dims.height), sc(0.8, 4.0),
        ang(0.0, std::numbers::pi), unit(0.1, 1.0);
    GaussianSet set;
    for (int i = 0; i < n; ++i)
        set.add(Gaussian2D::make({px(rng), py(rng)}, {sc(rng), sc(rng)}, ang(rng), {unit(rng), unit(rng), unit(rng)},
                                 unit(rng)));
    return set;
}

Raster random_target(RasterDims dims, int channels, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Raster r(dims.width, dims.height, channels);
    for (auto &v : r.data()) v = u(rng);
    return r;
}

void BM_Render(benchmark::State &state) {
    const RasterDims dims{128, 128};
    const GaussianSet set = random_set(static_cast<int>(state.range(0)), dims, 1);
    for (auto _ : state) benchmark::DoNotOptimize(render(set, dims, 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Render)->Arg(16)->Arg(128)->Arg(1024);

void BM_Gradients(benchmark::State &state) {
    const RasterDims dims{128, 128};
    const GaussianSet set = random_set(static_cast<int>(state.range(0)), dims, 2);
    const Raster target = random_target(dims, 3, 3);
    const RenderOutput out = render(set, dims, 3);
    for (auto _ : state) benchmark::DoNotOptimize(positional_gradients(out, target, set));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gradients)->Arg(16)->Arg(128)->Arg(1024);

void BM_SplitCosts(benchmark::State &state) {
    const RasterDims dims{64, 64};
    GaussianSet set;
    set.add(Gaussian2D::make({32, 32}, {8.0, 3.0}, 0.3, {0.5, 0.5, 0.5}, 0.8));
    const Raster target = random_target(dims, 1, 4);
    const RenderOutput out = render(set, dims, 1);
    const GradBuffer gb = positional_gradients(out, target, set);
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(eval_split_costs(set[0].g, n, gb.entries[0].pixels));
    state.SetItemsProcessed(state.iterations() * gb.entries[0].pixels.size());
}
BENCHMARK(BM_SplitCosts)->Arg(5)->Arg(49);

void BM_Kappa(benchmark::State &state) {
    Rng rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vec2> v(static_cast<std::size_t>(state.range(0)));
    for (auto &x : v) x = {n(rng), n(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(directional_consistency(std::span<const Vec2>(v)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Kappa)->Arg(64)->Arg(4096);

void BM_DcMap(benchmark::State &state) {
    const Raster image = random_target({128, 128}, 1, 6);
    for (auto _ : state) benchmark::DoNotOptimize(dc_map(image));
}
BENCHMARK(BM_DcMap);

}  // namespace

BENCHMARK_MAIN();
