#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "asmap/experiment.hpp"

namespace asmap {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plain-text config: `[section]` headers, `key = value` lines, '#' comments.
// Unknown sections or keys are rejected. Schema in docs/config.md.
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
};

ConfigFile parse_config_file(const std::string& path);
ConfigFile parse_config_text(const std::string& text);

// Validated builders; throw ConfigError on unknown keys or bad values.
SynthSpec build_synth_spec(const ConfigFile& cfg);
ExperimentConfig build_experiment_config(const ConfigFile& cfg);

struct SweepAxes {
    std::vector<FeatureMethod> methods;
    std::vector<BandSelection> bands;
    std::vector<double> windows;
};
SweepAxes build_sweep_axes(const ConfigFile& cfg);

// Resolved key=value dump, for provenance copies and report echoes.
std::string config_echo(const ConfigFile& cfg);

}  // namespace asmap
