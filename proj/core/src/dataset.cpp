#include "asmap/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "asmap/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "rawbin format is little-endian");

namespace asmap {

namespace {

constexpr char kRawMagic[8] = {'A', 'S', 'M', 'A', 'P', 'E', 'E', 'G'};
constexpr std::uint16_t kRawVersion = 1;
constexpr std::uint8_t kFlagRating = 0x01;
constexpr std::uint8_t kFlagTag = 0x02;
constexpr double kRatingThreshold = 5.5;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
void read_pod(std::ifstream& in, T& v, const std::string& path) {
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError("truncated rawbin file '" + path + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

Recording load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    Recording rec;
    std::string line;
    std::size_t line_no = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": malformed header line");
            const std::string key = trim(line.substr(1, eq - 1));
            const std::string value = trim(line.substr(eq + 1));
            if (key == "sample_rate_hz") {
                rec.sample_rate_hz = static_cast<unsigned>(std::stoul(value));
            } else if (key == "channels") {
                std::istringstream ss(value);
                std::string label;
                while (std::getline(ss, label, ',')) rec.channel_labels.push_back(trim(label));
            } else if (key == "valence") {
                rec.label.valence = std::stod(value);
            } else if (key == "arousal") {
                rec.label.arousal = std::stod(value);
            } else if (key == "class") {
                rec.label.class_tag = value;
            } else {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": unknown header field '" + key + "'");
            }
            continue;
        }
        std::vector<double> samples;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                samples.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": bad sample value '" + trim(cell) + "'");
            }
        }
        if (!rec.samples.empty() && samples.size() != rec.samples[0].size())
            throw ParseError(path + ":" + std::to_string(line_no) + ": channel row " +
                             std::to_string(row) + " has " +
                             std::to_string(samples.size()) + " samples, expected " +
                             std::to_string(rec.samples[0].size()));
        rec.samples.push_back(std::move(samples));
        ++row;
    }
    if (rec.sample_rate_hz == 0)
        throw ParseError(path + ": missing #sample_rate_hz header");
    if (rec.channel_labels.empty())
        throw ParseError(path + ": missing #channels header");
    if (rec.channel_labels.size() != rec.samples.size())
        throw ParseError(path + ": " + std::to_string(rec.channel_labels.size()) +
                         " channel labels but " + std::to_string(rec.samples.size()) +
                         " sample rows");
    rec.validate();
    return rec;
}

void save_csv(const std::string& path, const Recording& rec) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "#sample_rate_hz=" << rec.sample_rate_hz << "\n";
    out << "#channels=";
    for (std::size_t i = 0; i < rec.channel_labels.size(); ++i)
        out << (i ? "," : "") << rec.channel_labels[i];
    out << "\n";
    out.precision(17);
    if (rec.label.valence) out << "#valence=" << *rec.label.valence << "\n";
    if (rec.label.arousal) out << "#arousal=" << *rec.label.arousal << "\n";
    if (rec.label.class_tag) out << "#class=" << *rec.label.class_tag << "\n";
    for (const auto& row : rec.samples) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    if (!out) throw IoError("write failed: '" + path + "'");
}

Recording load_rawbin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kRawMagic, sizeof(kRawMagic)) != 0)
        throw ParseError("'" + path + "' is not an ASMAPEEG file");
    std::uint16_t version = 0;
    read_pod(in, version, path);
    if (version != kRawVersion)
        throw ParseError("'" + path + "': unsupported version " + std::to_string(version));

    std::uint32_t n_channels = 0, n_samples = 0, rate = 0;
    read_pod(in, n_channels, path);
    read_pod(in, n_samples, path);
    read_pod(in, rate, path);

    Recording rec;
    rec.sample_rate_hz = rate;

    std::uint8_t flags = 0;
    read_pod(in, flags, path);
    if (flags & kFlagRating) {
        double v = 0.0, a = 0.0;
        read_pod(in, v, path);
        read_pod(in, a, path);
        rec.label.valence = v;
        rec.label.arousal = a;
    }
    if (flags & kFlagTag) {
        std::uint32_t len = 0;
        read_pod(in, len, path);
        std::string tag(len, '\0');
        in.read(tag.data(), len);
        if (!in) throw ParseError("truncated rawbin file '" + path + "'");
        rec.label.class_tag = tag;
    }
    for (std::uint32_t c = 0; c < n_channels; ++c) {
        std::uint32_t len = 0;
        read_pod(in, len, path);
        std::string name(len, '\0');
        in.read(name.data(), len);
        if (!in) throw ParseError("truncated rawbin file '" + path + "'");
        rec.channel_labels.push_back(name);
    }
    rec.samples.assign(n_channels, std::vector<double>(n_samples));
    for (std::uint32_t c = 0; c < n_channels; ++c) {
        in.read(reinterpret_cast<char*>(rec.samples[c].data()),
                static_cast<std::streamsize>(n_samples * sizeof(double)));
        if (!in) throw ParseError("truncated sample data in '" + path + "'");
    }
    rec.validate();
    return rec;
}

void save_rawbin(const std::string& path, const Recording& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kRawMagic, sizeof(kRawMagic));
    write_pod(out, kRawVersion);
    write_pod(out, static_cast<std::uint32_t>(rec.n_channels()));
    write_pod(out, static_cast<std::uint32_t>(rec.n_samples()));
    write_pod(out, static_cast<std::uint32_t>(rec.sample_rate_hz));

    std::uint8_t flags = 0;
    if (rec.label.valence && rec.label.arousal) flags |= kFlagRating;
    if (rec.label.class_tag) flags |= kFlagTag;
    write_pod(out, flags);
    if (flags & kFlagRating) {
        write_pod(out, *rec.label.valence);
        write_pod(out, *rec.label.arousal);
    }
    if (flags & kFlagTag) {
        write_pod(out, static_cast<std::uint32_t>(rec.label.class_tag->size()));
        out.write(rec.label.class_tag->data(),
                  static_cast<std::streamsize>(rec.label.class_tag->size()));
    }
    for (const auto& name : rec.channel_labels) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (const auto& row : rec.samples)
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!out) throw IoError("write failed: '" + path + "'");
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

Recording load_recording(const std::string& path, RecordingFormat format) {
    return format == RecordingFormat::Csv ? load_csv(path) : load_rawbin(path);
}

void save_recording(const std::string& path, const Recording& rec,
                    RecordingFormat format) {
    rec.validate();
    if (format == RecordingFormat::Csv)
        save_csv(path, rec);
    else
        save_rawbin(path, rec);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    const auto base = std::filesystem::path(path).parent_path();
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string p, subject, trial;
        if (!std::getline(ss, p, ',') || !std::getline(ss, subject, ',') ||
            !std::getline(ss, trial))
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected `path,subject_id,trial_id`");
        std::filesystem::path fp(trim(p));
        if (fp.is_relative()) fp = base / fp;
        entries.push_back({fp.string(), trim(subject), trim(trial)});
    }
    return entries;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& e : entries)
        out << e.path << "," << e.subject_id << "," << e.trial_id << "\n";
    if (!out) throw IoError("write failed: '" + path + "'");
}

std::vector<Recording> load_recordings(const std::string& manifest_path) {
    std::vector<Recording> recs;
    for (const auto& entry : load_manifest(manifest_path)) {
        const auto ext = std::filesystem::path(entry.path).extension().string();
        Recording rec = load_recording(
            entry.path, ext == ".csv" ? RecordingFormat::Csv : RecordingFormat::RawBin);
        rec.subject_id = entry.subject_id;
        rec.trial_id = entry.trial_id;
        recs.push_back(std::move(rec));
    }
    return recs;
}

std::size_t scheme_n_classes(LabelScheme scheme) {
    switch (scheme) {
        case LabelScheme::ThreeClass: return 3;
        case LabelScheme::ValenceBinary: return 2;
        case LabelScheme::ArousalBinary: return 2;
        case LabelScheme::FourQuadrant: return 4;
    }
    throw std::invalid_argument("unknown label scheme");
}

std::string scheme_name(LabelScheme scheme) {
    switch (scheme) {
        case LabelScheme::ThreeClass: return "three_class";
        case LabelScheme::ValenceBinary: return "valence_binary";
        case LabelScheme::ArousalBinary: return "arousal_binary";
        case LabelScheme::FourQuadrant: return "four_quadrant";
    }
    return "?";
}

std::size_t assign_label(const LabelInfo& info, LabelScheme scheme) {
    const auto high = [](double rating) { return rating >= kRatingThreshold; };
    switch (scheme) {
        case LabelScheme::ThreeClass: {
            if (!info.class_tag)
                throw std::invalid_argument("assign_label: three-class needs a class tag");
            if (*info.class_tag == "positive") return 0;
            if (*info.class_tag == "negative") return 1;
            if (*info.class_tag == "neutral") return 2;
            throw std::invalid_argument("assign_label: unknown class tag '" +
                                        *info.class_tag + "'");
        }
        case LabelScheme::ValenceBinary:
            if (!info.valence)
                throw std::invalid_argument("assign_label: missing valence rating");
            return high(*info.valence) ? 1 : 0;
        case LabelScheme::ArousalBinary:
            if (!info.arousal)
                throw std::invalid_argument("assign_label: missing arousal rating");
            return high(*info.arousal) ? 1 : 0;
        case LabelScheme::FourQuadrant: {
            if (!info.valence || !info.arousal)
                throw std::invalid_argument("assign_label: missing rating pair");
            const bool hv = high(*info.valence);
            const bool ha = high(*info.arousal);
            if (hv && ha) return 0;   // HVHA
            if (hv && !ha) return 1;  // HVLA
            if (!hv && ha) return 2;  // LVHA
            return 3;                 // LVLA
        }
    }
    throw std::invalid_argument("unknown label scheme");
}

SplitResult split(const std::vector<LabeledWindow>& windows, const SplitSpec& spec) {
    if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0)
        throw std::invalid_argument("split: test_fraction must be in (0, 1)");
    std::map<std::size_t, std::size_t> class_counts;
    for (const auto& w : windows) ++class_counts[w.class_index];
    for (const auto& [cls, count] : class_counts)
        if (count < 2)
            throw std::invalid_argument("split: class " + std::to_string(cls) +
                                        " has fewer than 2 windows");
    if (windows.empty()) throw std::invalid_argument("split: no windows");

    Rng rng(spec.seed);
    SplitResult result;
    if (spec.mode == SplitMode::WindowRandomStratified) {
        std::map<std::size_t, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < windows.size(); ++i)
            by_class[windows[i].class_index].push_back(i);
        for (auto& [cls, idx] : by_class) {
            rng.shuffle(idx);
            auto n_test = static_cast<std::size_t>(
                std::llround(spec.test_fraction * static_cast<double>(idx.size())));
            n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
            for (std::size_t i = 0; i < idx.size(); ++i)
                (i < n_test ? result.test_indices : result.train_indices).push_back(idx[i]);
        }
    } else {
        std::map<std::string, std::vector<std::size_t>> by_trial;
        for (std::size_t i = 0; i < windows.size(); ++i)
            by_trial[windows[i].trial_id].push_back(i);
        std::vector<std::string> trials;
        for (const auto& [id, _] : by_trial) trials.push_back(id);
        if (trials.size() < 2)
            throw std::invalid_argument("split: trial-holdout needs >= 2 trials");
        rng.shuffle(trials);
        const auto target = static_cast<std::size_t>(
            std::llround(spec.test_fraction * static_cast<double>(windows.size())));
        std::size_t taken = 0;
        for (std::size_t t = 0; t < trials.size(); ++t) {
            auto& idx = by_trial[trials[t]];
            // keep at least one trial on each side
            const bool to_test = (taken < std::max<std::size_t>(target, 1)) &&
                                 (t + 1 < trials.size() || taken == 0);
            if (to_test && t + 1 < trials.size()) {
                taken += idx.size();
                result.test_indices.insert(result.test_indices.end(), idx.begin(), idx.end());
            } else {
                result.train_indices.insert(result.train_indices.end(), idx.begin(),
                                            idx.end());
            }
        }
        if (result.test_indices.empty() || result.train_indices.empty())
            throw std::invalid_argument("split: degenerate trial-holdout partition");
    }
    std::sort(result.train_indices.begin(), result.train_indices.end());
    std::sort(result.test_indices.begin(), result.test_indices.end());
    return result;
}

std::vector<Recording> synth_generate(const SynthSpec& spec) {
    if (spec.classes.empty())
        throw std::invalid_argument("synth_generate: no classes defined");
    if (spec.n_channels < 2)
        throw std::invalid_argument("synth_generate: need >= 2 channels");
    const double nyquist = spec.sample_rate_hz / 2.0;
    for (const auto& cls : spec.classes)
        for (const auto& g : cls.gains) {
            if (g.gain <= 0.0)
                throw std::invalid_argument("synth_generate: gains must be positive");
            const auto& bands = canonical_bands();
            const auto it = std::find_if(bands.begin(), bands.end(),
                                         [&](const Band& b) { return b.name == g.band; });
            if (it == bands.end())
                throw std::invalid_argument("synth_generate: unknown band '" + g.band + "'");
            if (it->lo_hz > nyquist)
                throw std::invalid_argument("synth_generate: band '" + g.band +
                                            "' above Nyquist");
            for (std::size_t c : g.channels)
                if (c >= spec.n_channels)
                    throw std::invalid_argument("synth_generate: channel index out of range");
        }

    const auto n_samples =
        static_cast<std::size_t>(std::llround(spec.trial_seconds * spec.sample_rate_hz));
    const std::size_t n_fft = next_pow2(n_samples);
    const auto& bands = canonical_bands();

    std::vector<Recording> out;
    std::size_t trial_counter = 0;
    for (std::size_t cls = 0; cls < spec.classes.size(); ++cls) {
        // per-channel amplitude scaling per frequency
        std::vector<std::map<std::string, double>> channel_gains(spec.n_channels);
        for (const auto& g : spec.classes[cls].gains)
            for (std::size_t c : g.channels) channel_gains[c][g.band] = g.gain;

        LabelInfo label = spec.classes[cls].label;
        if (!label.class_tag && !label.valence) {
            // auto-assign: ratings for 2/4-class runs, tags for 3-class
            if (spec.classes.size() == 3) {
                static const char* tags[3] = {"positive", "negative", "neutral"};
                label.class_tag = tags[cls];
            } else if (spec.classes.size() == 4) {
                label.valence = (cls == 0 || cls == 1) ? 7.5 : 2.5;
                label.arousal = (cls == 0 || cls == 2) ? 7.5 : 2.5;
            } else {
                label.valence = cls == 0 ? 7.5 : 2.5;
                label.arousal = 7.5;
                label.class_tag = "class" + std::to_string(cls);
            }
        }

        for (std::size_t t = 0; t < spec.n_trials_per_class; ++t, ++trial_counter) {
            Rng rng(substream_seed(spec.seed, trial_counter));
            Recording rec;
            rec.trial_id = "synth_c" + std::to_string(cls) + "_t" + std::to_string(t);
            rec.subject_id = "synth";
            rec.sample_rate_hz = spec.sample_rate_hz;
            rec.label = label;
            rec.samples.resize(spec.n_channels);
            for (std::size_t c = 0; c < spec.n_channels; ++c) {
                rec.channel_labels.push_back("ch" + std::to_string(c));
                std::vector<std::complex<double>> buf(n_fft);
                for (auto& v : buf) v = {spec.noise_sigma * rng.normal(), 0.0};
                fft_inplace(buf, false);
                for (std::size_t k = 0; k < n_fft; ++k) {
                    const std::size_t kk = std::min(k, n_fft - k);
                    const double f =
                        static_cast<double>(kk) * spec.sample_rate_hz / n_fft;
                    double scale = 1.0;
                    for (const auto& [band_name, gain] : channel_gains[c]) {
                        const auto it =
                            std::find_if(bands.begin(), bands.end(),
                                         [&](const Band& b) { return b.name == band_name; });
                        if (f >= it->lo_hz && f <= it->hi_hz) scale *= std::sqrt(gain);
                    }
                    buf[k] *= scale;
                }
                fft_inplace(buf, true);
                rec.samples[c].resize(n_samples);
                for (std::size_t i = 0; i < n_samples; ++i)
                    rec.samples[c][i] = buf[i].real();
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

}  // namespace asmap
