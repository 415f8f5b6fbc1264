#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "asmap/config.hpp"
#include "asmap/experiment.hpp"

using namespace asmap;
namespace fs = std::filesystem;

namespace {

// Small, fast synthetic experiment: 8 channels, 2 classes with opposite
// gamma boosts, short trials.
ExperimentConfig tiny_experiment(FeatureMethod method) {
    ExperimentConfig ec;
    SynthSpec synth;
    synth.n_channels = 8;
    synth.sample_rate_hz = 128;
    synth.trial_seconds = 12.0;
    synth.n_trials_per_class = 3;
    synth.noise_sigma = 1.0;
    synth.seed = 9;
    SynthClass c0, c1;
    c0.gains = {{"gamma", 4.0, {0, 1, 2, 3}}};
    c1.gains = {{"gamma", 4.0, {4, 5, 6, 7}}};
    synth.classes = {c0, c1};
    ec.synth = synth;
    ec.method = method;
    ec.window_seconds = 3.0;
    ec.split.test_fraction = 0.25;
    ec.split.seed = 1;
    ec.train.epochs = 3;
    ec.train.seed = 1;
    return ec;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("method and band names round trip") {
    for (const auto m : {FeatureMethod::De, FeatureMethod::Dasm, FeatureMethod::Rasm,
                         FeatureMethod::Dcau, FeatureMethod::AsMapCnn})
        CHECK(method_from_name(method_name(m)) == m);
    CHECK_THROWS_AS(method_from_name("PSD"), std::invalid_argument);

    CHECK(band_selection_from_name("ALL").all);
    const auto gamma = band_selection_from_name("gamma");
    CHECK_FALSE(gamma.all);
    CHECK(gamma.band_index == 4);
    CHECK(gamma.name() == "gamma");
    CHECK(gamma.indices() == std::vector<std::size_t>{4});
    CHECK(band_selection_from_name("ALL").indices() ==
          std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(band_selection_from_name("omega"), std::invalid_argument);
}

TEST_CASE("evaluate: accuracy equals the confusion trace over the total") {
    const auto ec = tiny_experiment(FeatureMethod::De);
    const auto windows = build_windows(synth_generate(*ec.synth), ec);
    REQUIRE(!windows.empty());

    Rng rng(2);
    ModelSpec spec;
    spec.kind = ModelKind::Mlp;
    spec.in_dim = windows.front().features.size();
    spec.n_classes = 2;
    const Model model = init_params(rng, spec);

    const auto report = evaluate(model, windows);
    std::size_t trace = 0, total = 0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            total += report.confusion[i][j];
            if (i == j) trace += report.confusion[i][j];
        }
    CHECK(total == windows.size());
    CHECK(report.accuracy ==
          doctest::Approx(static_cast<double>(trace) / total).epsilon(1e-12));

    // confusion row sums equal the per-class window counts
    std::size_t class0 = 0;
    for (const auto& w : windows)
        if (w.class_index == 0) ++class0;
    CHECK(report.confusion[0][0] + report.confusion[0][1] == class0);

    for (double p : report.precision) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    for (double r : report.recall) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }

    CHECK_THROWS_AS(evaluate(model, {}), std::invalid_argument);
}

TEST_CASE("build_windows: AsMap tensors are band-major CNN inputs") {
    const auto ec = tiny_experiment(FeatureMethod::AsMapCnn);
    const auto windows = build_windows(synth_generate(*ec.synth), ec);
    REQUIRE(!windows.empty());
    // 12 s trial, 3 s windows -> 4 windows per trial, 6 trials
    CHECK(windows.size() == 24);
    CHECK(windows.front().features.shape == std::vector<std::size_t>{5, 8, 8});
    for (double v : windows.front().features.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("run_experiment is deterministic and writes a coherent report") {
    auto ec = tiny_experiment(FeatureMethod::AsMapCnn);
    const auto dir = fs::temp_directory_path() / "asmap_exp_test";
    fs::remove_all(dir);
    ec.out_dir = (dir / "a").string();
    const auto r1 = run_experiment(ec);
    ec.out_dir = (dir / "b").string();
    const auto r2 = run_experiment(ec);

    CHECK(r1.accuracy == r2.accuracy);
    CHECK(r1.history.size() == ec.train.epochs);
    CHECK(r1.accuracy >= 0.0);
    CHECK(r1.accuracy <= 1.0);

    // identical runs produce byte-identical reports; timing lives in a sidecar
    const auto ja = slurp(dir / "a" / "report.json");
    const auto jb = slurp(dir / "b" / "report.json");
    CHECK(!ja.empty());
    CHECK(ja == jb);
    CHECK(ja.find("wall") == std::string::npos);
    CHECK(fs::exists(dir / "a" / "report.timing.txt"));
    fs::remove_all(dir);
}

TEST_CASE("run_experiment tags failure stages") {
    auto ec = tiny_experiment(FeatureMethod::AsMapCnn);
    ec.manifest_path = "/nonexistent/manifest.csv";  // conflicts with synth source
    try {
        run_experiment(ec);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("[data]") == 0);
    }

    ec = tiny_experiment(FeatureMethod::AsMapCnn);
    ec.window_seconds = 2.5;  // not a multiple of the 1 s epoch
    try {
        run_experiment(ec);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("[features]") == 0);
    }
}

TEST_CASE("run_sweep covers the full grid and records failures per cell") {
    const auto ec = tiny_experiment(FeatureMethod::De);
    std::vector<FeatureMethod> methods = {FeatureMethod::De, FeatureMethod::AsMapCnn};
    std::vector<BandSelection> bands = {band_selection_from_name("gamma"),
                                        band_selection_from_name("ALL")};
    std::vector<double> windows = {3.0, 6.0};
    const auto result = run_sweep(ec, methods, bands, windows);
    REQUIRE(result.cells.size() == 8);
    std::set<std::tuple<std::string, std::string, double>> seen;
    for (const auto& c : result.cells) {
        CHECK(seen.insert({c.method, c.band, c.window_seconds}).second);
        CHECK(c.ok);
        CHECK(c.accuracy >= 0.0);
        CHECK(c.accuracy <= 1.0);
    }

    // an impossible window size fails that cell but not the sweep
    const auto partial = run_sweep(ec, {FeatureMethod::De},
                                   {band_selection_from_name("ALL")}, {3.0, 2.5});
    REQUIRE(partial.cells.size() == 2);
    CHECK(partial.cells[0].ok);
    CHECK_FALSE(partial.cells[1].ok);
    CHECK(!partial.cells[1].error.empty());
}

TEST_CASE("sweep CSV and curve files are well formed") {
    const auto ec = tiny_experiment(FeatureMethod::De);
    const auto result = run_sweep(ec, {FeatureMethod::De, FeatureMethod::Dasm},
                                  {band_selection_from_name("gamma")}, {3.0, 6.0, 2.5});
    const auto dir = fs::temp_directory_path() / "asmap_sweep_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    write_sweep_csv((dir / "sweep.csv").string(), result);
    std::ifstream csv(dir / "sweep.csv");
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "method,band,window_s,accuracy,seed,status");
    std::size_t rows = 0, failed = 0;
    while (std::getline(csv, line)) {
        ++rows;
        if (line.find(",NA,") != std::string::npos) {
            ++failed;
            CHECK(line.find("failed") != std::string::npos);
        } else {
            CHECK(line.find(",ok") != std::string::npos);
        }
    }
    CHECK(rows == result.cells.size());
    CHECK(failed == 2);  // the 2.5 s window fails for both methods

    write_sweep_curves(dir.string(), result);
    std::ifstream curve(dir / "curve_gamma.csv");
    REQUIRE(std::getline(curve, line));
    CHECK(line == "window_s,accuracy");
    std::size_t curve_rows = 0;
    while (std::getline(curve, line)) ++curve_rows;
    CHECK(curve_rows == 4);  // two methods x two successful windows
    fs::remove_all(dir);
}

TEST_CASE("config parsing: schema enforcement") {
    const std::string good = R"(
[experiment]
method = AsMapCnn
band = gamma
window_seconds = 3

[synth]
n_channels = 8
n_classes = 2
class0_gains = gamma:4.0:0-3
class1_gains = gamma:4.0:4|5|6|7

[train]
epochs = 2
seed = 11
)";
    const auto cfg = parse_config_text(good);
    const auto ec = build_experiment_config(cfg);
    CHECK(ec.method == FeatureMethod::AsMapCnn);
    CHECK(ec.bands.name() == "gamma");
    CHECK(ec.train.epochs == 2);
    CHECK(ec.train.seed == 11);
    REQUIRE(ec.synth.has_value());
    CHECK(ec.synth->n_channels == 8);
    REQUIRE(ec.synth->classes.size() == 2);
    CHECK(ec.synth->classes[0].gains[0].channels ==
          std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(ec.synth->classes[1].gains[0].channels ==
          std::vector<std::size_t>{4, 5, 6, 7});

    CHECK_THROWS_AS(parse_config_text("[bogus]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[train]\nbogus_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs = 1\nepochs = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("epochs = 1\n"), ConfigError);

    // window must be an epoch multiple
    CHECK_THROWS_AS(
        build_experiment_config(parse_config_text(
            "[experiment]\nwindow_seconds = 2.5\n[synth]\nn_classes = 2\n")),
        ConfigError);
    // manifest source without a path
    CHECK_THROWS_AS(
        build_experiment_config(parse_config_text("[experiment]\nsource = manifest\n")),
        ConfigError);
    // bad values
    CHECK_THROWS_AS(
        build_experiment_config(parse_config_text(
            "[experiment]\nband = omega\n[synth]\nn_classes = 2\n")),
        ConfigError);
    CHECK_THROWS_AS(
        build_experiment_config(parse_config_text(
            "[split]\ntest_fraction = 1.5\n[synth]\nn_classes = 2\n")),
        ConfigError);
}

TEST_CASE("sweep axes parsing and config echo") {
    const auto cfg = parse_config_text(
        "[sweep]\nmethods = DE, AsMapCnn\nbands = gamma, ALL\nwindows = 3, 6\n");
    const auto axes = build_sweep_axes(cfg);
    REQUIRE(axes.methods.size() == 2);
    CHECK(axes.methods[1] == FeatureMethod::AsMapCnn);
    REQUIRE(axes.bands.size() == 2);
    CHECK(axes.bands[1].all);
    CHECK(axes.windows == std::vector<double>{3.0, 6.0});

    const auto echo = config_echo(cfg);
    CHECK(echo.find("[sweep]") != std::string::npos);
    CHECK(echo.find("methods = DE, AsMapCnn") != std::string::npos);
}
