#include <benchmark/benchmark.h>

#include "noiselab/analysis.hpp"
#include "noiselab/shapley.hpp"

using namespace noiselab;

namespace {

std::vector<std::vector<double>> gaussian_cloud(std::size_t n, std::size_t d,
                                                std::uint64_t seed) {
    auto s = RngStream::root(seed).child("cloud", 0).sampler();
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (auto& row : out)
        for (double& v : row) v = s.normal();
    return out;
}

void BM_MmdRbf(benchmark::State& state) {
    const auto a = gaussian_cloud(static_cast<std::size_t>(state.range(0)), 16, 1);
    const auto b = gaussian_cloud(static_cast<std::size_t>(state.range(0)), 16, 2);
    for (auto _ : state) {
        double v = mmd_rbf(a, b);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_MmdRbf)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_ShapleyExact(benchmark::State& state) {
    const std::size_t k = static_cast<std::size_t>(state.range(0));
    const auto background = gaussian_cloud(32, k, 3);
    const auto instances = gaussian_cloud(1, k, 4);
    const FeatureModel model = [](std::span<const double> x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += (i % 2 ? 1.0 : -0.5) * x[i] + x[i] * x[i];
        return acc;
    };
    for (auto _ : state) {
        ShapleyRow row = shapley_exact(model, instances[0], background);
        benchmark::DoNotOptimize(row.phi.data());
    }
}
BENCHMARK(BM_ShapleyExact)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
    const std::size_t side = static_cast<std::size_t>(state.range(0));
    ImageTensor a(1, side, side, 0.5);
    ImageTensor b(1, side, side, 0.5);
    auto s = RngStream::root(5).child("n", 0).sampler();
    for (double& v : b.data) v += 0.05 * s.normal();
    for (auto _ : state) {
        QualityMetrics q = reference_quality(a, b);
        benchmark::DoNotOptimize(q);
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(192)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
