#include "asmap/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace asmap {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"experiment",
         {"source", "manifest", "method", "band", "window_seconds", "smoothing_span",
          "label_scheme", "pairing_file", "out_dir"}},
        {"spectral", {"fft_len", "epoch_seconds"}},
        {"split", {"test_fraction", "mode", "seed"}},
        {"train", {"learning_rate", "epochs", "batch_size", "seed", "shuffle"}},
        {"synth",
         {"n_channels", "sample_rate_hz", "trial_seconds", "n_trials_per_class",
          "n_classes", "noise_sigma", "seed"}},
        {"sweep", {"methods", "bands", "windows"}},
    };
    return keys;
}

bool is_synth_class_key(const std::string& key) {
    // class<N>_gains / class<N>_tag / class<N>_valence / class<N>_arousal
    if (key.rfind("class", 0) != 0) return false;
    std::size_t i = 5;
    if (i >= key.size() || !std::isdigit(static_cast<unsigned char>(key[i]))) return false;
    while (i < key.size() && std::isdigit(static_cast<unsigned char>(key[i]))) ++i;
    const std::string suffix = key.substr(i);
    return suffix == "_gains" || suffix == "_tag" || suffix == "_valence" ||
           suffix == "_arousal";
}

double to_double(const std::string& section, const std::string& key,
                 const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a number: '" + value + "'");
    }
}

std::uint64_t to_u64(const std::string& section, const std::string& key,
                     const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": not a non-negative integer: '" +
                          value + "'");
    }
}

bool to_bool(const std::string& section, const std::string& key,
             const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("[" + section + "] " + key + ": not a boolean: '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// channel spec: "3", "0-7", or "1|4|9"
std::vector<std::size_t> parse_channels(const std::string& spec) {
    std::vector<std::size_t> out;
    for (const auto& part : split_list(spec, '|')) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.push_back(to_u64("synth", "gains", part));
        } else {
            const auto lo = to_u64("synth", "gains", part.substr(0, dash));
            const auto hi = to_u64("synth", "gains", part.substr(dash + 1));
            if (hi < lo) throw ConfigError("[synth] gains: bad channel range '" + part + "'");
            for (std::size_t c = lo; c <= hi; ++c) out.push_back(c);
        }
    }
    if (out.empty()) throw ConfigError("[synth] gains: empty channel list");
    return out;
}

// gain spec list: "gamma:4.0:0-7;beta:2.0:1|3"
std::vector<GainSpec> parse_gains(const std::string& value) {
    std::vector<GainSpec> out;
    for (const auto& item : split_list(value, ';')) {
        const auto parts = split_list(item, ':');
        if (parts.size() != 3)
            throw ConfigError("[synth] gains: expected band:gain:channels in '" + item + "'");
        GainSpec g;
        g.band = parts[0];
        g.gain = to_double("synth", "gains", parts[1]);
        g.channels = parse_channels(parts[2]);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

ConfigFile parse_config_text(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(section))
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unknown section [" + section + "]");
            cfg.sections[section];  // allow empty sections
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const bool known = known_keys().at(section).count(key) > 0 ||
                           (section == "synth" && is_synth_class_key(key));
        if (!known)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unknown key '" + key + "' in section [" + section + "]");
        if (!cfg.sections[section].emplace(key, value).second)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");
    }
    return cfg;
}

ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

SynthSpec build_synth_spec(const ConfigFile& cfg) {
    if (!cfg.sections.count("synth"))
        throw ConfigError("config: missing [synth] section");
    SynthSpec spec;
    spec.n_channels = to_u64("synth", "n_channels", cfg.get("synth", "n_channels", "16"));
    spec.sample_rate_hz = static_cast<unsigned>(
        to_u64("synth", "sample_rate_hz", cfg.get("synth", "sample_rate_hz", "200")));
    spec.trial_seconds =
        to_double("synth", "trial_seconds", cfg.get("synth", "trial_seconds", "60"));
    spec.n_trials_per_class = to_u64("synth", "n_trials_per_class",
                                     cfg.get("synth", "n_trials_per_class", "20"));
    spec.noise_sigma =
        to_double("synth", "noise_sigma", cfg.get("synth", "noise_sigma", "1.0"));
    spec.seed = to_u64("synth", "seed", cfg.get("synth", "seed", "0"));
    const auto n_classes =
        to_u64("synth", "n_classes", cfg.get("synth", "n_classes", "2"));
    if (n_classes == 0) throw ConfigError("[synth] n_classes must be positive");
    if (spec.trial_seconds <= 0.0)
        throw ConfigError("[synth] trial_seconds must be positive");
    if (spec.noise_sigma <= 0.0)
        throw ConfigError("[synth] noise_sigma must be positive");

    spec.classes.resize(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        const std::string prefix = "class" + std::to_string(i);
        if (cfg.has("synth", prefix + "_gains"))
            spec.classes[i].gains = parse_gains(cfg.get("synth", prefix + "_gains", ""));
        if (cfg.has("synth", prefix + "_tag"))
            spec.classes[i].label.class_tag = cfg.get("synth", prefix + "_tag", "");
        if (cfg.has("synth", prefix + "_valence"))
            spec.classes[i].label.valence = to_double(
                "synth", prefix + "_valence", cfg.get("synth", prefix + "_valence", ""));
        if (cfg.has("synth", prefix + "_arousal"))
            spec.classes[i].label.arousal = to_double(
                "synth", prefix + "_arousal", cfg.get("synth", prefix + "_arousal", ""));
    }
    // reject classN_* keys beyond n_classes
    for (const auto& [key, value] : cfg.sections.at("synth")) {
        if (!is_synth_class_key(key)) continue;
        const auto idx = to_u64("synth", key, key.substr(5, key.find('_') - 5));
        if (idx >= n_classes)
            throw ConfigError("[synth] " + key + ": class index beyond n_classes");
    }
    return spec;
}

ExperimentConfig build_experiment_config(const ConfigFile& cfg) {
    ExperimentConfig ec;

    std::string source = cfg.get("experiment", "source", "");
    if (source.empty())
        source = cfg.sections.count("synth") ? "synth" : "manifest";
    if (source == "synth") {
        ec.synth = build_synth_spec(cfg);
    } else if (source == "manifest") {
        ec.manifest_path = cfg.get("experiment", "manifest", "");
        if (ec.manifest_path.empty())
            throw ConfigError("[experiment] manifest path required for manifest source");
    } else {
        throw ConfigError("[experiment] source must be 'manifest' or 'synth'");
    }

    ec.method = method_from_name(cfg.get("experiment", "method", "AsMapCnn"));
    try {
        ec.bands = band_selection_from_name(cfg.get("experiment", "band", "ALL"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    ec.window_seconds = to_double("experiment", "window_seconds",
                                  cfg.get("experiment", "window_seconds", "3"));
    ec.smoothing_span = to_u64("experiment", "smoothing_span",
                               cfg.get("experiment", "smoothing_span", "5"));
    if (ec.smoothing_span == 0 || ec.smoothing_span % 2 == 0)
        throw ConfigError("[experiment] smoothing_span must be odd");
    ec.pairing_file = cfg.get("experiment", "pairing_file", "");
    ec.out_dir = cfg.get("experiment", "out_dir", "");

    const std::string scheme = cfg.get("experiment", "label_scheme", "valence_binary");
    if (scheme == "three_class") ec.scheme = LabelScheme::ThreeClass;
    else if (scheme == "valence_binary") ec.scheme = LabelScheme::ValenceBinary;
    else if (scheme == "arousal_binary") ec.scheme = LabelScheme::ArousalBinary;
    else if (scheme == "four_quadrant") ec.scheme = LabelScheme::FourQuadrant;
    else throw ConfigError("[experiment] unknown label_scheme '" + scheme + "'");

    ec.spectral.fft_len = to_u64("spectral", "fft_len", cfg.get("spectral", "fft_len", "256"));
    ec.spectral.epoch_seconds =
        to_double("spectral", "epoch_seconds", cfg.get("spectral", "epoch_seconds", "1"));
    if (!is_power_of_two(ec.spectral.fft_len))
        throw ConfigError("[spectral] fft_len must be a power of two");
    if (ec.spectral.epoch_seconds <= 0.0)
        throw ConfigError("[spectral] epoch_seconds must be positive");

    const double ratio = ec.window_seconds / ec.spectral.epoch_seconds;
    if (ratio < 1.0 || std::fabs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError(
            "[experiment] window_seconds must be an integer multiple of epoch_seconds");

    ec.split.test_fraction =
        to_double("split", "test_fraction", cfg.get("split", "test_fraction", "0.2"));
    if (ec.split.test_fraction <= 0.0 || ec.split.test_fraction >= 1.0)
        throw ConfigError("[split] test_fraction must be in (0, 1)");
    const std::string mode = cfg.get("split", "mode", "window_random");
    if (mode == "window_random") ec.split.mode = SplitMode::WindowRandomStratified;
    else if (mode == "trial_holdout") ec.split.mode = SplitMode::TrialHoldout;
    else throw ConfigError("[split] unknown mode '" + mode + "'");
    ec.split.seed = to_u64("split", "seed", cfg.get("split", "seed", "0"));

    ec.train.learning_rate =
        to_double("train", "learning_rate", cfg.get("train", "learning_rate", "0.001"));
    ec.train.epochs = to_u64("train", "epochs", cfg.get("train", "epochs", "30"));
    ec.train.batch_size = to_u64("train", "batch_size", cfg.get("train", "batch_size", "32"));
    ec.train.seed = to_u64("train", "seed", cfg.get("train", "seed", "0"));
    ec.train.shuffle = to_bool("train", "shuffle", cfg.get("train", "shuffle", "true"));
    if (ec.train.learning_rate < 0.0)
        throw ConfigError("[train] learning_rate must be non-negative");
    if (ec.train.epochs == 0 || ec.train.batch_size == 0)
        throw ConfigError("[train] epochs and batch_size must be positive");

    return ec;
}

SweepAxes build_sweep_axes(const ConfigFile& cfg) {
    SweepAxes axes;
    try {
        for (const auto& m : split_list(cfg.get("sweep", "methods", "AsMapCnn"), ','))
            axes.methods.push_back(method_from_name(m));
        for (const auto& b :
             split_list(cfg.get("sweep", "bands", "delta,theta,alpha,beta,gamma,ALL"), ','))
            axes.bands.push_back(band_selection_from_name(b));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[sweep] ") + e.what());
    }
    for (const auto& w : split_list(cfg.get("sweep", "windows", "3"), ','))
        axes.windows.push_back(to_double("sweep", "windows", w));
    if (axes.methods.empty() || axes.bands.empty() || axes.windows.empty())
        throw ConfigError("[sweep] methods, bands, and windows must be non-empty");
    return axes;
}

std::string config_echo(const ConfigFile& cfg) {
    std::ostringstream out;
    for (const auto& [section, kv] : cfg.sections) {
        out << "[" << section << "]\n";
        for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
    }
    return out.str();
}

}  // namespace asmap
