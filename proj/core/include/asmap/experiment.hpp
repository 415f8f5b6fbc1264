#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asmap/dataset.hpp"
#include "asmap/features.hpp"
#include "asmap/nn.hpp"

namespace asmap {

enum class FeatureMethod { De, Dasm, Rasm, Dcau, AsMapCnn };

std::string method_name(FeatureMethod m);
FeatureMethod method_from_name(const std::string& s);

// Selection over the canonical five bands.
struct BandSelection {
    bool all = true;
    std::size_t band_index = 0;  // valid when !all

    std::string name() const;
    std::vector<std::size_t> indices() const;  // into canonical_bands()
};
BandSelection band_selection_from_name(const std::string& s);

struct ExperimentConfig {
    // Data source: exactly one of manifest_path / synth.
    std::string manifest_path;
    std::optional<SynthSpec> synth;

    LabelScheme scheme = LabelScheme::ValenceBinary;
    FeatureMethod method = FeatureMethod::AsMapCnn;
    BandSelection bands;
    double window_seconds = 3.0;
    std::size_t smoothing_span = 5;
    SplitSpec split;
    TrainConfig train;
    SpectralConfig spectral;
    std::string pairing_file;  // empty -> montage default for DASM/RASM/DCAU
    std::string out_dir;
};

struct EvaluationReport {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<EpochStats> history;
    std::uint64_t seed = 0;
    std::string config_echo;
    double wall_seconds = 0.0;  // reported on stdout / sidecar, not in report.json
};

struct SweepCell {
    std::string method;
    std::string band;
    double window_seconds = 0.0;
    bool ok = false;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
    std::string error;  // populated when !ok
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

// Accuracy = trace/total over the test set; confusion row sums equal per-class
// test counts.
EvaluationReport evaluate(const Model& model, const std::vector<LabeledWindow>& test);

// Full pipeline: smooth -> window -> featurize -> split -> train -> evaluate.
// Writes report.json (and a timing sidecar) into cfg.out_dir when set.
EvaluationReport run_experiment(const ExperimentConfig& cfg);

// Cross product of methods x bands x windows, reusing the smoothed DE tensor
// per trial across cells. Individual cell failures are recorded, not fatal.
SweepResult run_sweep(const ExperimentConfig& base,
                      const std::vector<FeatureMethod>& methods,
                      const std::vector<BandSelection>& bands,
                      const std::vector<double>& window_sizes);

// Materializes labeled windows for one method/band selection (shared by
// run_experiment, run_sweep, and the CLI extract path).
std::vector<LabeledWindow> build_windows(const std::vector<Recording>& recordings,
                                         const ExperimentConfig& cfg);

void write_report_json(const std::string& path, const EvaluationReport& report);
void write_sweep_csv(const std::string& path, const SweepResult& result);
// One `curve_<band>.csv` per band with `window_s,accuracy` lines.
void write_sweep_curves(const std::string& dir, const SweepResult& result);

}  // namespace asmap
