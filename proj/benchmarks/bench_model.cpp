#include <benchmark/benchmark.h>

#include "noiselab/model.hpp"
#include "noiselab/textures.hpp"
#include "noiselab/train.hpp"

using namespace noiselab;

namespace {

void BM_Encode(benchmark::State& state) {
    EncoderConfig cfg;
    cfg.input_size = static_cast<std::size_t>(state.range(0));
    const EncoderNet net(cfg);
    const std::vector<double> params = net.init_params();
    const ImageTensor x =
        procedural_texture("all", 1, cfg.input_size, RngStream::root(1).child("img", 0));
    for (auto _ : state) {
        std::vector<double> z = net.forward(x, params);
        benchmark::DoNotOptimize(z.data());
    }
}
BENCHMARK(BM_Encode)->Arg(32)->Arg(64);

void BM_ContrastiveStep(benchmark::State& state) {
    EncoderConfig cfg;
    std::vector<ImageTensor> cleans;
    for (std::uint64_t i = 0; i < 8; ++i)
        cleans.push_back(procedural_texture("all", 1, 32, RngStream::root(2).child("c", i)));
    PretrainSchedule sched;
    sched.epochs = 1;
    sched.steps_per_epoch = 1;
    sched.batch = 8;
    sched.lr = 0.02;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        EncoderCheckpoint ckpt = pretrain(cfg, cleans, sched, RngStream::root(seed++));
        benchmark::DoNotOptimize(ckpt.encoder_params.data());
    }
}
BENCHMARK(BM_ContrastiveStep)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
