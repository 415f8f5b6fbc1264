#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "asmap/features.hpp"
#include "asmap/rng.hpp"

using namespace asmap;

namespace {

constexpr double kDeWhite = 1.4189385332046727;  // 0.5*ln(2*pi*e)

Recording noise_recording(std::size_t channels, unsigned fs, double seconds,
                          double sigma, std::uint64_t seed) {
    Recording rec;
    rec.trial_id = "t";
    rec.subject_id = "s";
    rec.sample_rate_hz = fs;
    Rng rng(seed);
    const std::size_t n = static_cast<std::size_t>(seconds * fs);
    rec.samples.assign(channels, std::vector<double>(n));
    for (std::size_t c = 0; c < channels; ++c) {
        rec.channel_labels.push_back("ch" + std::to_string(c));
        for (auto& v : rec.samples[c]) v = sigma * rng.normal();
    }
    return rec;
}

DeTensor make_de(std::size_t channels, std::size_t epochs, std::size_t bands) {
    DeTensor de;
    de.n_channels = channels;
    de.n_epochs = epochs;
    for (std::size_t b = 0; b < bands; ++b)
        de.band_names.push_back("b" + std::to_string(b));
    de.values.assign(channels * epochs * bands, 0.0);
    return de;
}

WindowedDeTensor make_wde(std::size_t channels, std::size_t windows,
                          const std::vector<std::string>& band_names) {
    WindowedDeTensor wde;
    wde.n_channels = channels;
    wde.n_windows = windows;
    wde.band_names = band_names;
    wde.window_seconds = 3.0;
    wde.values.assign(channels * windows * band_names.size(), 0.0);
    return wde;
}

const std::vector<std::string> kSeed62Labels = {
    "FP1", "FPZ", "FP2", "AF3", "AF4", "F7",  "F5",  "F3",  "F1",  "FZ",  "F2",
    "F4",  "F6",  "F8",  "FT7", "FC5", "FC3", "FC1", "FCZ", "FC2", "FC4", "FC6",
    "FT8", "T7",  "C5",  "C3",  "C1",  "CZ",  "C2",  "C4",  "C6",  "T8",  "TP7",
    "CP5", "CP3", "CP1", "CPZ", "CP2", "CP4", "CP6", "TP8", "P7",  "P5",  "P3",
    "P1",  "PZ",  "P2",  "P4",  "P6",  "P8",  "PO7", "PO5", "PO3", "POZ", "PO4",
    "PO6", "PO8", "CB1", "O1",  "OZ",  "O2",  "CB2"};

const std::vector<std::string> kDeap32Labels = {
    "Fp1", "AF3", "F3",  "F7",  "FC5", "FC1", "C3",  "T7",  "CP5", "CP1", "P3",
    "P7",  "PO3", "O1",  "Oz",  "Pz",  "Fp2", "AF4", "Fz",  "F4",  "F8",  "FC6",
    "FC2", "Cz",  "C4",  "T8",  "CP6", "CP2", "P4",  "P8",  "PO4", "O2"};

}  // namespace

TEST_CASE("DE of unit white noise approaches 0.5*ln(2*pi*e)") {
    const auto rec = noise_recording(2, 200, 60.0, 1.0, 21);
    SpectralConfig cfg;
    const auto de = compute_de(rec, {full_band(200.0)}, cfg);
    REQUIRE(de.n_epochs == 60);
    double mean = 0.0;
    for (double v : de.values) mean += v;
    mean /= static_cast<double>(de.values.size());
    CHECK(std::abs(mean - kDeWhite) < 0.1);
}

TEST_CASE("doubling the signal amplitude shifts DE by exactly ln 2") {
    auto rec = noise_recording(2, 200, 10.0, 1.5, 22);
    SpectralConfig cfg;
    const auto base = compute_de(rec, canonical_bands(), cfg);
    for (auto& ch : rec.samples)
        for (auto& v : ch) v *= 2.0;
    const auto scaled = compute_de(rec, canonical_bands(), cfg);
    for (std::size_t i = 0; i < base.values.size(); ++i)
        CHECK(scaled.values[i] - base.values[i] ==
              doctest::Approx(std::numbers::ln2).epsilon(1e-9));
}

TEST_CASE("DE of an all-zero signal hits the power floor") {
    Recording rec;
    rec.trial_id = "z";
    rec.sample_rate_hz = 200;
    rec.channel_labels = {"a", "b"};
    rec.samples.assign(2, std::vector<double>(400, 0.0));
    SpectralConfig cfg;
    const auto de = compute_de(rec, {full_band(200.0)}, cfg);
    const double expect = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * 1e-12);
    for (double v : de.values) {
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("moving average smoothing with truncated edges") {
    auto de = make_de(1, 5, 1);
    de.values = {0, 3, 0, 3, 0};
    const auto s = smooth_moving_average(de, 3);
    CHECK(s.values == std::vector<double>{1.5, 1, 2, 1, 1.5});

    CHECK(smooth_moving_average(de, 1).values == de.values);  // identity
    CHECK_THROWS_AS(smooth_moving_average(de, 2), std::invalid_argument);
}

TEST_CASE("window_average means consecutive epochs and drops the tail") {
    auto de = make_de(1, 4, 1);
    de.values = {1, 2, 3, 4};
    de.epoch_seconds = 1.0;
    const auto w = window_average(de, 2.0);
    CHECK(w.n_windows == 2);
    CHECK(w.values == std::vector<double>{1.5, 3.5});

    auto odd = make_de(1, 5, 1);
    odd.values = {1, 2, 3, 4, 10};
    CHECK(window_average(odd, 2.0).n_windows == 2);  // trailing epoch dropped

    CHECK_THROWS_AS(window_average(de, 2.5), std::invalid_argument);
}

TEST_CASE("asmap of a known DE column") {
    auto wde = make_wde(3, 1, {"b0"});
    wde.values = {2, 5, 3};  // [channel][window=1][band=1]
    const auto raw = asmap_raw(wde, 0);
    CHECK(raw.at(0, 1, 0) == doctest::Approx(-3.0));
    CHECK(raw.at(1, 0, 0) == doctest::Approx(3.0));
    CHECK(raw.at(1, 2, 0) == doctest::Approx(2.0));
    CHECK(raw.at(0, 0, 0) == 0.0);
    CHECK(raw.at(2, 2, 0) == 0.0);

    const auto norm = normalize_asmap(raw);
    // slice min -3, max 3 -> N = (A + 3) / 6
    CHECK(norm.at(0, 1, 0) == doctest::Approx(0.0));
    CHECK(norm.at(1, 0, 0) == doctest::Approx(1.0));
    CHECK(norm.at(1, 2, 0) == doctest::Approx(5.0 / 6.0));
    CHECK(norm.at(0, 0, 0) == doctest::Approx(0.5));
    CHECK(norm.normalized);
    CHECK_THROWS_AS(normalize_asmap(norm), std::invalid_argument);
}

TEST_CASE("asmap property suite over random DE columns") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t channels = 2 + rng.uniform_int(14);
        const std::size_t bands = 1 + rng.uniform_int(5);
        std::vector<std::string> names;
        for (std::size_t b = 0; b < bands; ++b) names.push_back("b" + std::to_string(b));
        auto wde = make_wde(channels, 1, names);
        for (auto& v : wde.values) v = 10.0 * rng.normal();

        const auto raw = asmap_raw(wde, 0);
        // antisymmetry, zero diagonal
        for (std::size_t i = 0; i < channels; ++i)
            for (std::size_t j = 0; j < channels; ++j)
                for (std::size_t b = 0; b < bands; ++b) {
                    REQUIRE(raw.at(i, j, b) == -raw.at(j, i, b));
                    if (i == j) REQUIRE(raw.at(i, j, b) == 0.0);
                }

        // translation invariance: adding a per-band constant leaves the map unchanged
        auto shifted = wde;
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t b = 0; b < bands; ++b)
                shifted.at(c, 0, b) += 17.25 + static_cast<double>(b);
        const auto raw2 = asmap_raw(shifted, 0);
        for (std::size_t i = 0; i < raw.values.size(); ++i)
            REQUIRE(raw.values[i] == doctest::Approx(raw2.values[i]).epsilon(1e-12));

        const auto norm = normalize_asmap(raw);
        for (std::size_t i = 0; i < channels; ++i)
            for (std::size_t j = 0; j < channels; ++j)
                for (std::size_t b = 0; b < bands; ++b) {
                    const double n = norm.at(i, j, b);
                    REQUIRE(n >= 0.0);
                    REQUIRE(n <= 1.0);
                    REQUIRE(std::abs(n + norm.at(j, i, b) - 1.0) < 1e-12);
                    if (i == j) REQUIRE(n == doctest::Approx(0.5).epsilon(1e-12));
                }
    }

    // degenerate all-equal slice -> all 0.5
    auto flat = make_wde(4, 1, {"b0"});
    for (auto& v : flat.values) v = 3.75;
    const auto norm = normalize_asmap(asmap_raw(flat, 0));
    for (double v : norm.values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("select_bands keeps the requested axes in order") {
    auto wde = make_wde(2, 1, {"delta", "theta", "alpha"});
    for (std::size_t i = 0; i < wde.values.size(); ++i)
        wde.values[i] = static_cast<double>(i);
    const auto sel = select_bands(wde, {0, 2});
    CHECK(sel.band_names == std::vector<std::string>{"delta", "alpha"});
    CHECK(sel.at(0, 0, 0) == wde.at(0, 0, 0));
    CHECK(sel.at(0, 0, 1) == wde.at(0, 0, 2));
    CHECK(sel.at(1, 0, 1) == wde.at(1, 0, 2));
    CHECK_THROWS_AS(select_bands(wde, {3}), std::invalid_argument);
}

TEST_CASE("baseline feature dimensions match the montage conventions") {
    std::vector<std::string> five = {"delta", "theta", "alpha", "beta", "gamma"};

    auto seed_wde = make_wde(62, 1, five);
    Rng rng(3);
    for (auto& v : seed_wde.values) v = rng.normal();

    const auto hemi = default_pairing(PairingKind::Hemispheric, kSeed62Labels);
    const auto fp = default_pairing(PairingKind::FrontalPosterior, kSeed62Labels);
    CHECK(hemi.pairs.size() == 27);
    CHECK(fp.pairs.size() == 23);
    CHECK(feature_dasm(seed_wde, 0, hemi).size() == 135);
    CHECK(feature_rasm(seed_wde, 0, hemi).size() == 135);
    CHECK(feature_dcau(seed_wde, 0, fp).size() == 115);
    CHECK(feature_de_flat(seed_wde, 0).size() == 310);

    auto deap_wde = make_wde(32, 1, five);
    const auto deap_hemi = default_pairing(PairingKind::Hemispheric, kDeap32Labels);
    const auto deap_fp = default_pairing(PairingKind::FrontalPosterior, kDeap32Labels);
    CHECK(deap_hemi.pairs.size() == 14);
    CHECK(deap_fp.pairs.size() == 13);
    CHECK(feature_dasm(deap_wde, 0, deap_hemi).size() == 70);
    CHECK(feature_dcau(deap_wde, 0, deap_fp).size() == 65);
}

TEST_CASE("baseline features are band-major and follow their definitions") {
    auto wde = make_wde(4, 1, {"b0", "b1"});
    // DE values: channel c, band b -> 10*c + b
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t b = 0; b < 2; ++b) wde.at(c, 0, b) = 10.0 * c + b;

    const auto flat = feature_de_flat(wde, 0);
    REQUIRE(flat.size() == 8);
    // band-major: all channels of band 0 first
    CHECK(flat[0] == 0.0);
    CHECK(flat[1] == 10.0);
    CHECK(flat[3] == 30.0);
    CHECK(flat[4] == 1.0);
    CHECK(flat[7] == 31.0);

    ChannelPairing pairs;
    pairs.kind = PairingKind::Hemispheric;
    pairs.pairs = {{0, 2}, {1, 3}};
    const auto dasm = feature_dasm(wde, 0, pairs);
    REQUIRE(dasm.size() == 4);
    CHECK(dasm[0] == doctest::Approx(-20.0));  // band0 pair (0,2)
    CHECK(dasm[1] == doctest::Approx(-20.0));  // band0 pair (1,3)
    CHECK(dasm[2] == doctest::Approx(-20.0));  // band1 pair (0,2)

    const auto rasm = feature_rasm(wde, 0, pairs);
    CHECK(rasm[2] == doctest::Approx(1.0 / 21.0));  // band1: 1/21

    pairs.kind = PairingKind::FrontalPosterior;
    const auto dcau = feature_dcau(wde, 0, pairs);
    CHECK(dcau[0] == doctest::Approx(-20.0));

    // out-of-range pair index
    pairs.pairs = {{0, 9}};
    CHECK_THROWS_AS(feature_dcau(wde, 0, pairs), std::invalid_argument);
}

TEST_CASE("RASM clamps a near-zero denominator, sign preserved") {
    auto wde = make_wde(2, 1, {"b0"});
    wde.at(0, 0, 0) = 2.0;
    wde.at(1, 0, 0) = 0.0;
    ChannelPairing pairs;
    pairs.pairs = {{0, 1}};
    const auto v = feature_rasm(wde, 0, pairs);
    CHECK(std::isfinite(v[0]));
    CHECK(v[0] == doctest::Approx(2.0e9));

    wde.at(1, 0, 0) = -1e-12;
    const auto neg = feature_rasm(wde, 0, pairs);
    CHECK(neg[0] == doctest::Approx(-2.0e9));
}

TEST_CASE("pairing files in data/ resolve to the embedded defaults") {
    const std::string dir = ASMAP_DATA_DIR;
    const auto hemi = load_pairing(dir + "/seed62_hemispheric.pairs",
                                   PairingKind::Hemispheric, kSeed62Labels);
    CHECK(hemi.pairs == default_pairing(PairingKind::Hemispheric, kSeed62Labels).pairs);

    const auto fp = load_pairing(dir + "/seed62_frontal_posterior.pairs",
                                 PairingKind::FrontalPosterior, kSeed62Labels);
    CHECK(fp.pairs == default_pairing(PairingKind::FrontalPosterior, kSeed62Labels).pairs);

    // case-insensitive label resolution against the DEAP spellings
    const auto deap = load_pairing(dir + "/deap32_hemispheric.pairs",
                                   PairingKind::Hemispheric, kDeap32Labels);
    CHECK(deap.pairs == default_pairing(PairingKind::Hemispheric, kDeap32Labels).pairs);
    const auto deap_fp = load_pairing(dir + "/deap32_frontal_posterior.pairs",
                                      PairingKind::FrontalPosterior, kDeap32Labels);
    CHECK(deap_fp.pairs ==
          default_pairing(PairingKind::FrontalPosterior, kDeap32Labels).pairs);
}

TEST_CASE("default pairing falls back to index conventions on unknown montages") {
    std::vector<std::string> labels = {"a", "b", "c", "d", "e", "f"};
    const auto hemi = default_pairing(PairingKind::Hemispheric, labels);
    CHECK(hemi.pairs == std::vector<std::pair<std::size_t, std::size_t>>{
                            {0, 3}, {1, 4}, {2, 5}});
    const auto fp = default_pairing(PairingKind::FrontalPosterior, labels);
    CHECK(fp.pairs == std::vector<std::pair<std::size_t, std::size_t>>{
                          {0, 5}, {1, 4}, {2, 3}});
}

TEST_CASE("smoothing and windowing preserve tensor metadata") {
    auto de = make_de(3, 6, 2);
    de.trial_id = "meta";
    Rng rng(8);
    for (auto& v : de.values) v = rng.normal();
    const auto s = smooth_moving_average(de, 5);
    CHECK(s.trial_id == "meta");
    CHECK(s.n_channels == 3);
    CHECK(s.n_epochs == 6);
    const auto w = window_average(s, 3.0);
    CHECK(w.trial_id == "meta");
    CHECK(w.n_windows == 2);
    CHECK(w.band_names == de.band_names);
}
