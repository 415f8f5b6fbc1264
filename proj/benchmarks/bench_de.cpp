#include <benchmark/benchmark.h>

#include "asmap/features.hpp"
#include "asmap/rng.hpp"

using namespace asmap;

namespace {

Recording make_recording(std::size_t channels, std::size_t seconds) {
    Rng rng(6);
    Recording rec;
    rec.trial_id = "bench";
    rec.subject_id = "bench";
    rec.sample_rate_hz = 200;
    rec.samples.assign(channels, std::vector<double>(seconds * 200));
    for (std::size_t c = 0; c < channels; ++c) {
        rec.channel_labels.push_back("ch" + std::to_string(c));
        for (auto& v : rec.samples[c]) v = rng.normal();
    }
    return rec;
}

}  // namespace

static void BM_ComputeDe(benchmark::State& state) {
    const auto rec = make_recording(static_cast<std::size_t>(state.range(0)), 60);
    SpectralConfig cfg;
    for (auto _ : state) {
        auto de = compute_de(rec, canonical_bands(), cfg);
        benchmark::DoNotOptimize(de.values.data());
    }
}
BENCHMARK(BM_ComputeDe)->Arg(8)->Arg(32)->Arg(62);

static void BM_AsMapBuild(benchmark::State& state) {
    const std::size_t channels = static_cast<std::size_t>(state.range(0));
    const auto rec = make_recording(channels, 60);
    SpectralConfig cfg;
    const auto de = compute_de(rec, canonical_bands(), cfg);
    const auto wde = window_average(smooth_moving_average(de, 5), 3.0);
    for (auto _ : state) {
        for (std::size_t w = 0; w < wde.n_windows; ++w) {
            auto m = normalize_asmap(asmap_raw(wde, w));
            benchmark::DoNotOptimize(m.values.data());
        }
    }
}
BENCHMARK(BM_AsMapBuild)->Arg(8)->Arg(32)->Arg(62);

BENCHMARK_MAIN();
