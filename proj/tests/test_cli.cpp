#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ASMAP_CLI_PATH;

int run(const std::string& args, const fs::path& stdout_file = {}) {
    std::string cmd = kCli + " " + args;
    if (!stdout_file.empty())
        cmd += " > " + stdout_file.string() + " 2>/dev/null";
    else
        cmd += " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// 8-channel 2-class setup, small enough to train in a couple of seconds
const char* kConfig = R"(
[experiment]
method = AsMapCnn
band = gamma
window_seconds = 2

[synth]
n_channels = 8
sample_rate_hz = 128
trial_seconds = 8
n_trials_per_class = 3
n_classes = 2
seed = 3
class0_gains = gamma:4.0:0-3
class1_gains = gamma:4.0:4-7

[split]
test_fraction = 0.25
seed = 3

[train]
epochs = 2
seed = 3
)";

fs::path write_config(const fs::path& dir, const char* text = kConfig) {
    const auto path = dir / "run.cfg";
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("cli: gradcheck exit codes") {
    CHECK(run("gradcheck") == 0);
    CHECK(run("gradcheck --layers dense") == 0);
    CHECK(run("gradcheck --eps 0") == 2);
    CHECK(run("gradcheck --layers bogus") == 2);
    CHECK(run("bogus-subcommand") == 2);
}

TEST_CASE("cli: gradcheck reports the max relative error") {
    const auto dir = fresh_dir("asmap_cli_gc");
    const auto out = dir / "out.txt";
    CHECK(run("gradcheck", out) == 0);
    CHECK(slurp(out).find("max_rel_err=") == 0);
    fs::remove_all(dir);
}

TEST_CASE("cli: synth refuses a non-empty output directory without --force") {
    const auto dir = fresh_dir("asmap_cli_synth");
    const auto cfg = write_config(dir);
    const auto out = dir / "data";

    CHECK(run("synth --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "manifest.csv"));
    CHECK(fs::exists(out / "band_power_audit.csv"));
    CHECK(fs::exists(out / "config_resolved.cfg"));

    CHECK(run("synth --config " + cfg.string() + " --out " + out.string()) == 3);
    CHECK(run("synth --config " + cfg.string() + " --out " + out.string() +
              " --force") == 0);

    // missing config file is a config error
    CHECK(run("synth --config /nonexistent.cfg --out " + (dir / "x").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: extract, train, eval pipeline") {
    const auto dir = fresh_dir("asmap_cli_pipe");
    const auto cfg = write_config(dir);
    const auto features = dir / "features.bin";
    const auto model = dir / "model.bin";

    const auto log = dir / "extract.txt";
    CHECK(run("extract --config " + cfg.string() + " --out " + features.string(),
              log) == 0);
    // per-trial window counts on stdout: 8 s trials, 2 s windows -> 4 each
    const auto extract_out = slurp(log);
    CHECK(extract_out.find("windows=4") != std::string::npos);

    CHECK(run("train --config " + cfg.string() + " --features " + features.string() +
              " --model-out " + model.string()) == 0);
    CHECK(fs::exists(model));
    CHECK(fs::exists(model.string() + ".history.csv"));

    const auto eval_out = dir / "eval.txt";
    CHECK(run("eval --config " + cfg.string() + " --features " + features.string() +
              " --model-in " + model.string() + " --out " +
              (dir / "report.json").string(),
              eval_out) == 0);
    const auto line = slurp(eval_out);
    REQUIRE(line.rfind("accuracy=", 0) == 0);
    const double acc = std::stod(line.substr(9));
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(fs::exists(dir / "report.json"));

    // eval with a mismatching band selection is a config error
    std::string other(kConfig);
    const auto pos = other.find("band = gamma");
    other.replace(pos, std::string("band = gamma").size(), "band = ALL");
    const auto cfg2 = dir / "run2.cfg";
    {
        std::ofstream out(cfg2);
        out << other;
    }
    CHECK(run("eval --config " + cfg2.string() + " --features " + features.string() +
              " --model-in " + model.string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: sweep writes CSV and curve outputs") {
    const auto dir = fresh_dir("asmap_cli_sweep");
    const std::string cfg_text = std::string(kConfig) +
                                 "\n[sweep]\nmethods = DE\nbands = gamma\nwindows = 2, 4\n";
    const auto cfg = write_config(dir, cfg_text.c_str());
    const auto out = dir / "sweep";

    const auto log = dir / "sweep.txt";
    CHECK(run("sweep --config " + cfg.string() + " --out " + out.string(), log) == 0);
    CHECK(fs::exists(out / "sweep.csv"));
    CHECK(fs::exists(out / "curve_gamma.csv"));
    std::ifstream csv(out / "sweep.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    CHECK(header == "method,band,window_s,accuracy,seed,status");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == 2);
    CHECK(slurp(log).find("ok") != std::string::npos);
    fs::remove_all(dir);
}
