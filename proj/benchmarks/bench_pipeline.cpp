#include "dysfluency/dtw.hpp"
#include "dysfluency/features.hpp"
#include "dysfluency/pipeline.hpp"
#include "dysfluency/synthgen.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace dysfluency;

namespace {

const AudioBuffer& utterance() {
    static const AudioBuffer audio = preprocess(generate(fluent_spec(3, 4.0, 40)).audio).audio;
    return audio;
}

void BM_Mfcc(benchmark::State& state) {
    const AudioBuffer& a = utterance();
    for (auto _ : state) benchmark::DoNotOptimize(compute_mfcc(a));
    state.counters["audio_s"] = a.duration_s();
}
BENCHMARK(BM_Mfcc)->Unit(benchmark::kMillisecond);

void BM_F0(benchmark::State& state) {
    const AudioBuffer& a = utterance();
    for (auto _ : state) benchmark::DoNotOptimize(compute_f0(a));
    state.counters["audio_s"] = a.duration_s();
}
BENCHMARK(BM_F0)->Unit(benchmark::kMillisecond);

void BM_Dtw(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 4.0);
    FrameSeries a = FrameSeries::matrix(n, kMfccDim), b = FrameSeries::matrix(n, kMfccDim);
    for (double& v : a.values) v = g(rng);
    for (double& v : b.values) v = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(dtw_euclidean(a, b));
}
BENCHMARK(BM_Dtw)->Arg(15)->Arg(30)->Arg(100);

void BM_Pipeline(benchmark::State& state) {
    const SynthOutput out = generate(standard_corpus(20260101, 1)[0]);
    const RuleConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(detect(out.audio, cfg, &out.alignment));
    state.counters["audio_s"] = out.audio.duration_s();
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
