#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asmap/signal.hpp"
#include "asmap/tensor.hpp"

namespace asmap {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RecordingFormat { Csv, RawBin };

// CSV: '#sample_rate_hz=', '#channels=', optional '#valence=', '#arousal=',
// '#class=' headers, then one comma-separated row per channel.
// RawBin: magic "ASMAPEEG", u16 version, little-endian (see docs/config.md).
Recording load_recording(const std::string& path, RecordingFormat format);
void save_recording(const std::string& path, const Recording& rec,
                    RecordingFormat format);

struct ManifestEntry {
    std::string path;
    std::string subject_id;
    std::string trial_id;
};
// One `path,subject_id,trial_id` line per trial; relative paths resolve
// against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<Recording> load_recordings(const std::string& manifest_path);

// --- labels -----------------------------------------------------------------

enum class LabelScheme { ThreeClass, ValenceBinary, ArousalBinary, FourQuadrant };

std::size_t scheme_n_classes(LabelScheme scheme);
std::string scheme_name(LabelScheme scheme);

// Ratings >= 5.5 map to the high class. ThreeClass: positive=0, negative=1,
// neutral=2. FourQuadrant: HVHA=0, HVLA=1, LVHA=2, LVLA=3.
std::size_t assign_label(const LabelInfo& info, LabelScheme scheme);

// --- labeled windows and splitting -------------------------------------------

struct LabeledWindow {
    Tensor features;  // [bands,C,C] AsMap stack or [dim] flat vector
    std::size_t class_index = 0;
    std::string trial_id;
    std::string subject_id;
    std::size_t window_index = 0;
};

enum class SplitMode { WindowRandomStratified, TrialHoldout };

struct SplitSpec {
    double test_fraction = 0.2;
    SplitMode mode = SplitMode::WindowRandomStratified;
    std::uint64_t seed = 0;
};

struct SplitResult {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Disjoint, exhaustive, deterministic per seed. Stratified mode preserves
// class proportions within one window; trial-holdout keeps every trial's
// windows on one side. Requires >= 2 windows per class.
SplitResult split(const std::vector<LabeledWindow>& windows, const SplitSpec& spec);

// --- synthetic EEG ------------------------------------------------------------

// Per-class spectral shaping: a power gain applied to one band on a channel
// subset.
struct GainSpec {
    std::string band;  // canonical band name
    double gain = 1.0;
    std::vector<std::size_t> channels;
};

struct SynthClass {
    std::vector<GainSpec> gains;
    LabelInfo label;  // empty -> auto-assigned (ratings or tags by class count)
};

struct SynthSpec {
    std::size_t n_channels = 16;
    unsigned sample_rate_hz = 200;
    double trial_seconds = 60.0;
    std::size_t n_trials_per_class = 20;
    std::vector<SynthClass> classes;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

// White Gaussian noise shaped in the frequency domain: band bins are scaled
// by sqrt(gain) so the realized band power matches the requested gain.
// Deterministic per seed via per-trial substreams.
std::vector<Recording> synth_generate(const SynthSpec& spec);

}  // namespace asmap
