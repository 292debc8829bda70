#include <benchmark/benchmark.h>

#include "demonsonar/dsp_core.hpp"
#include "demonsonar/prng.hpp"

#include <vector>

using namespace demonsonar;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    Xoshiro256ss rng(seed);
    std::vector<double> signal(n);
    for (double& v : signal) {
        v = rng.uniform(-1.0, 1.0);
    }
    return signal;
}

} // namespace

static void BM_Fft(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fft(signal));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oNLogN);

static void BM_DftNaive(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dft_naive(signal));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DftNaive)->RangeMultiplier(4)->Range(64, 1024)->Complexity(benchmark::oNSquared);

static void BM_FirDesign(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            design_fir(FilterKind::bandpass, 1600.0, 7200.0, 16000.0,
                       static_cast<std::size_t>(state.range(0))));
    }
}
BENCHMARK(BM_FirDesign)->Arg(63)->Arg(127)->Arg(321);

static void BM_FilterApply(benchmark::State& state) {
    const FirFilter filter = design_fir(FilterKind::bandpass, 1600.0, 7200.0, 16000.0,
                                        static_cast<std::size_t>(state.range(0)));
    const auto signal = random_signal(160000, 3); // 10 s @ 16 kHz
    for (auto _ : state) {
        benchmark::DoNotOptimize(filter_apply(filter, signal));
    }
}
BENCHMARK(BM_FilterApply)->Arg(63)->Arg(127)->Arg(321)->Unit(benchmark::kMillisecond);

static void BM_Decimate(benchmark::State& state) {
    const auto signal = random_signal(160000, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(decimate(signal, 16000.0, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Decimate)->Arg(10)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_WelchSpectrum(benchmark::State& state) {
    const auto signal = random_signal(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(welch_spectrum(signal, 200.0, 1024, 0.5, WindowKind::hann));
    }
}
BENCHMARK(BM_WelchSpectrum)->Arg(2048)->Arg(12000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
