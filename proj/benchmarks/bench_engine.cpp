#include <benchmark/benchmark.h>

#include "noiselab/engine.hpp"
#include "noiselab/textures.hpp"

using namespace noiselab;

namespace {

ImageTensor bench_image(std::size_t side) {
    return procedural_texture("all", 1, side, RngStream::root(1).child("img", 0));
}

void BM_Gaussian(benchmark::State& state) {
    const ImageTensor x = bench_image(static_cast<std::size_t>(state.range(0)));
    const RngStream rng = RngStream::root(2).child("g", 0);
    for (auto _ : state) {
        ImageTensor y = apply_gaussian(x, 0.1, rng);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Gaussian)->Arg(32)->Arg(192);

void BM_Anisotropic(benchmark::State& state) {
    const ImageTensor x = bench_image(static_cast<std::size_t>(state.range(0)));
    const RngStream rng = RngStream::root(3).child("a", 0);
    for (auto _ : state) {
        ImageTensor y = apply_anisotropic(x, 0.1, rng);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Anisotropic)->Arg(32)->Arg(192);

void BM_Compose(benchmark::State& state) {
    const ImageTensor x = bench_image(static_cast<std::size_t>(state.range(0)));
    const RngStream rng = RngStream::root(4);
    const NoiseStrengths eta = sample_strengths(rng.child("gene", 0));
    std::uint64_t i = 0;
    for (auto _ : state) {
        NoiseSample s = compose(x, eta, default_order(), rng.child("field", i++), "id");
        benchmark::DoNotOptimize(s.corrupted.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Compose)->Arg(32)->Arg(192);

void BM_SampleStrengths(benchmark::State& state) {
    const RngStream rng = RngStream::root(5);
    std::uint64_t i = 0;
    for (auto _ : state) {
        NoiseStrengths s = sample_strengths(rng.child("gene", i++));
        benchmark::DoNotOptimize(s.eta.data());
    }
}
BENCHMARK(BM_SampleStrengths);

} // namespace

BENCHMARK_MAIN();
