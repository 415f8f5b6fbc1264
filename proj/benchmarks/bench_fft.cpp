#include <benchmark/benchmark.h>

#include "asmap/rng.hpp"
#include "asmap/signal.hpp"

using namespace asmap;

static void BM_FftReal(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    for (auto _ : state) {
        auto y = fft_real(x, n);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(n));
}
BENCHMARK(BM_FftReal)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_Periodogram(benchmark::State& state) {
    const std::size_t channels = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    Epoch epoch(channels, std::vector<double>(200));
    for (auto& ch : epoch)
        for (auto& v : ch) v = rng.normal();
    SpectralConfig cfg;
    for (auto _ : state) {
        auto pg = periodogram(epoch, cfg, 200.0);
        benchmark::DoNotOptimize(pg.power.data());
    }
}
BENCHMARK(BM_Periodogram)->Arg(8)->Arg(32)->Arg(62);

BENCHMARK_MAIN();
