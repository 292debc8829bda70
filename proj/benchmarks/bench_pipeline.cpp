#include <benchmark/benchmark.h>

#include "demonsonar/demon.hpp"
#include "demonsonar/neural_cascade.hpp"
#include "demonsonar/prng.hpp"
#include "demonsonar/salient_features.hpp"
#include "demonsonar/synth_oracle.hpp"

using namespace demonsonar;

namespace {

VesselParams bench_vessel() {
    VesselParams params;
    params.shaft_hz = 4.2;
    params.blade_count = 3;
    params.mod_depth = 0.5;
    params.snr_db = 10.0;
    params.carrier_lo_hz = 1600.0;
    params.carrier_hi_hz = 7200.0;
    params.duration_s = 10.0;
    params.sample_rate_hz = 16000.0;
    params.seed = 7;
    return params;
}

} // namespace

static void BM_SynthVessel(benchmark::State& state) {
    const VesselParams params = bench_vessel();
    for (auto _ : state) {
        benchmark::DoNotOptimize(synth_vessel_signal(params));
    }
}
BENCHMARK(BM_SynthVessel)->Unit(benchmark::kMillisecond);

static void BM_DemonSpectrum(benchmark::State& state) {
    const SampleBuffer buffer = synth_vessel_signal(bench_vessel());
    const DemonConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(demon_spectrum(buffer, config));
    }
}
BENCHMARK(BM_DemonSpectrum)->Unit(benchmark::kMillisecond);

static void BM_ExtractFeatures(benchmark::State& state) {
    const DemonSpectrum spectrum = demon_spectrum(synth_vessel_signal(bench_vessel()), DemonConfig{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_salient_features(spectrum));
    }
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMicrosecond);

static void BM_CombSearch(benchmark::State& state) {
    const DemonSpectrum spectrum = demon_spectrum(synth_vessel_signal(bench_vessel()), DemonConfig{});
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_shaft_frequency(spectrum, 1.0, 15.0, 5));
    }
}
BENCHMARK(BM_CombSearch)->Unit(benchmark::kMicrosecond);

static void BM_Forward(benchmark::State& state) {
    const MlpModel model = init_mlp({5, static_cast<std::size_t>(state.range(0)), 10}, 1);
    const std::vector<double> x = {0.1, -0.4, 1.2, 0.0, -0.9};
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(model, x));
    }
}
BENCHMARK(BM_Forward)->Arg(12)->Arg(28);

static void BM_LossAndGradients(benchmark::State& state) {
    const MlpModel model = init_mlp({5, static_cast<std::size_t>(state.range(0)), 10}, 1);
    Xoshiro256ss rng(2);
    std::vector<Example> batch(16);
    for (Example& example : batch) {
        example.x.resize(5);
        for (double& v : example.x) {
            v = rng.uniform(-1.5, 1.5);
        }
        example.label = static_cast<int>(rng.below(10));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_gradients(model, batch));
    }
}
BENCHMARK(BM_LossAndGradients)->Arg(12)->Arg(28);

BENCHMARK_MAIN();
