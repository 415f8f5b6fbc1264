#include "asmap/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace asmap {

namespace {

constexpr double kPowerFloor = 1e-12;
constexpr double kRasmDenomFloor = 1e-9;

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::size_t resolve_label(const std::string& label,
                          const std::vector<std::string>& channel_labels) {
    for (std::size_t i = 0; i < channel_labels.size(); ++i)
        if (upper(channel_labels[i]) == upper(label)) return i;
    throw std::invalid_argument("channel pairing: unknown channel label '" + label + "'");
}

// SEED 62-channel 10-20 montage, 27 hemispheric left/right pairs.
const char* kSeed62Hemispheric[][2] = {
    {"FP1", "FP2"}, {"AF3", "AF4"}, {"F7", "F8"},   {"F5", "F6"},   {"F3", "F4"},
    {"F1", "F2"},   {"FT7", "FT8"}, {"FC5", "FC6"}, {"FC3", "FC4"}, {"FC1", "FC2"},
    {"T7", "T8"},   {"C5", "C6"},   {"C3", "C4"},   {"C1", "C2"},   {"TP7", "TP8"},
    {"CP5", "CP6"}, {"CP3", "CP4"}, {"CP1", "CP2"}, {"P7", "P8"},   {"P5", "P6"},
    {"P3", "P4"},   {"P1", "P2"},   {"PO7", "PO8"}, {"PO5", "PO6"}, {"PO3", "PO4"},
    {"CB1", "CB2"}, {"O1", "O2"},
};

// 23 frontal/posterior pairs.
const char* kSeed62FrontalPosterior[][2] = {
    {"FT7", "TP7"}, {"FC5", "CP5"}, {"FC3", "CP3"}, {"FC1", "CP1"}, {"FCZ", "CPZ"},
    {"FC2", "CP2"}, {"FC4", "CP4"}, {"FC6", "CP6"}, {"FT8", "TP8"}, {"F7", "P7"},
    {"F5", "P5"},   {"F3", "P3"},   {"F1", "P1"},   {"FZ", "PZ"},   {"F2", "P2"},
    {"F4", "P4"},   {"F6", "P6"},   {"F8", "P8"},   {"FP1", "O1"},  {"FPZ", "OZ"},
    {"FP2", "O2"},  {"AF3", "PO3"}, {"AF4", "PO4"},
};

// DEAP 32-channel montage.
const char* kDeap32Hemispheric[][2] = {
    {"FP1", "FP2"}, {"AF3", "AF4"}, {"F3", "F4"},   {"F7", "F8"},   {"FC5", "FC6"},
    {"FC1", "FC2"}, {"C3", "C4"},   {"T7", "T8"},   {"CP5", "CP6"}, {"CP1", "CP2"},
    {"P3", "P4"},   {"P7", "P8"},   {"PO3", "PO4"}, {"O1", "O2"},
};

const char* kDeap32FrontalPosterior[][2] = {
    {"FP1", "O1"},  {"AF3", "PO3"}, {"F7", "P7"},   {"F3", "P3"},   {"FC5", "CP5"},
    {"FC1", "CP1"}, {"FZ", "PZ"},   {"FP2", "O2"},  {"AF4", "PO4"}, {"F8", "P8"},
    {"F4", "P4"},   {"FC6", "CP6"}, {"FC2", "CP2"},
};

template <std::size_t N>
bool try_resolve(const char* (&table)[N][2], const std::vector<std::string>& labels,
                 ChannelPairing& out) {
    out.pairs.clear();
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t a = labels.size(), b = labels.size();
        for (std::size_t c = 0; c < labels.size(); ++c) {
            const std::string u = upper(labels[c]);
            if (u == table[i][0]) a = c;
            if (u == table[i][1]) b = c;
        }
        if (a == labels.size() || b == labels.size()) return false;
        out.pairs.emplace_back(a, b);
    }
    return true;
}

void check_pairs(const ChannelPairing& p, std::size_t n_channels) {
    for (const auto& [a, b] : p.pairs) {
        if (a >= n_channels || b >= n_channels)
            throw std::invalid_argument("channel pairing: index out of range");
        if (a == b)
            throw std::invalid_argument("channel pairing: pair with identical channels");
    }
}

std::vector<double> pairwise_feature(const WindowedDeTensor& wde, std::size_t window,
                                     const ChannelPairing& pairs, bool ratio) {
    if (window >= wde.n_windows)
        throw std::invalid_argument("pairwise feature: window index out of range");
    check_pairs(pairs, wde.n_channels);
    std::vector<double> v;
    v.reserve(pairs.pairs.size() * wde.n_bands());
    for (std::size_t b = 0; b < wde.n_bands(); ++b) {
        for (const auto& [a, p] : pairs.pairs) {
            const double lhs = wde.at(a, window, b);
            double rhs = wde.at(p, window, b);
            if (ratio) {
                if (std::fabs(rhs) < kRasmDenomFloor)
                    rhs = std::copysign(kRasmDenomFloor, rhs);
                v.push_back(lhs / rhs);
            } else {
                v.push_back(lhs - rhs);
            }
        }
    }
    return v;
}

}  // namespace

ChannelPairing load_pairing(const std::string& path, PairingKind kind,
                            const std::vector<std::string>& channel_labels) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("channel pairing: cannot open '" + path + "'");
    ChannelPairing pairing;
    pairing.kind = kind;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a)) continue;  // blank line
        if (!(ss >> b) || (ss >> extra))
            throw std::invalid_argument("channel pairing: malformed line " +
                                        std::to_string(line_no) + " in " + path);
        pairing.pairs.emplace_back(resolve_label(a, channel_labels),
                                   resolve_label(b, channel_labels));
    }
    check_pairs(pairing, channel_labels.size());
    return pairing;
}

ChannelPairing default_pairing(PairingKind kind,
                               const std::vector<std::string>& channel_labels) {
    ChannelPairing p;
    p.kind = kind;
    if (kind == PairingKind::Hemispheric) {
        if (try_resolve(kSeed62Hemispheric, channel_labels, p)) return p;
        if (try_resolve(kDeap32Hemispheric, channel_labels, p)) return p;
        // index convention: first half of the channel list vs second half
        const std::size_t half = channel_labels.size() / 2;
        p.pairs.clear();
        for (std::size_t i = 0; i < half; ++i) p.pairs.emplace_back(i, i + half);
    } else {
        if (try_resolve(kSeed62FrontalPosterior, channel_labels, p)) return p;
        if (try_resolve(kDeap32FrontalPosterior, channel_labels, p)) return p;
        // index convention: outer-in mirror
        const std::size_t n = channel_labels.size();
        p.pairs.clear();
        for (std::size_t i = 0; i < n / 2; ++i) p.pairs.emplace_back(i, n - 1 - i);
    }
    return p;
}

DeTensor compute_de(const Recording& rec, const std::vector<Band>& bands,
                    const SpectralConfig& cfg) {
    if (bands.empty()) throw std::invalid_argument("compute_de: empty band list");
    const double nyquist = rec.sample_rate_hz / 2.0;
    for (const auto& b : bands)
        if (b.lo_hz > nyquist)
            throw std::invalid_argument("compute_de: band '" + b.name +
                                        "' above Nyquist");
    const auto epochs = segment_epochs(rec, cfg);

    DeTensor de;
    de.trial_id = rec.trial_id;
    de.epoch_seconds = cfg.epoch_seconds;
    de.n_channels = rec.n_channels();
    de.n_epochs = epochs.size();
    for (const auto& b : bands) de.band_names.push_back(b.name);
    de.values.assign(de.n_channels * de.n_epochs * bands.size(), 0.0);

    const double two_pi_e = 2.0 * M_PI * std::exp(1.0);
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const auto pg = periodogram(epochs[e], cfg, rec.sample_rate_hz);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const auto power = band_power(pg, bands[b], rec.sample_rate_hz);
            for (std::size_t c = 0; c < de.n_channels; ++c)
                de.at(c, e, b) = 0.5 * std::log(two_pi_e * std::max(power[c], kPowerFloor));
        }
    }
    return de;
}

DeTensor smooth_moving_average(const DeTensor& de, std::size_t span) {
    if (span == 0 || span % 2 == 0)
        throw std::invalid_argument("smooth_moving_average: span must be odd");
    if (span == 1) return de;

    DeTensor out = de;
    const std::size_t half = span / 2;
    for (std::size_t c = 0; c < de.n_channels; ++c) {
        for (std::size_t b = 0; b < de.n_bands(); ++b) {
            for (std::size_t e = 0; e < de.n_epochs; ++e) {
                const std::size_t lo = e >= half ? e - half : 0;
                const std::size_t hi = std::min(e + half, de.n_epochs - 1);
                double sum = 0.0;
                for (std::size_t k = lo; k <= hi; ++k) sum += de.at(c, k, b);
                out.at(c, e, b) = sum / static_cast<double>(hi - lo + 1);
            }
        }
    }
    return out;
}

WindowedDeTensor window_average(const DeTensor& de, double window_seconds) {
    const double ratio = window_seconds / de.epoch_seconds;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (n == 0 || std::fabs(ratio - static_cast<double>(n)) > 1e-9)
        throw std::invalid_argument(
            "window_average: window_seconds must be an integer multiple of epoch_seconds");

    WindowedDeTensor out;
    out.trial_id = de.trial_id;
    out.band_names = de.band_names;
    out.window_seconds = window_seconds;
    out.n_channels = de.n_channels;
    out.n_windows = de.n_epochs / n;
    out.values.assign(out.n_channels * out.n_windows * out.n_bands(), 0.0);
    for (std::size_t c = 0; c < out.n_channels; ++c)
        for (std::size_t w = 0; w < out.n_windows; ++w)
            for (std::size_t b = 0; b < out.n_bands(); ++b) {
                double sum = 0.0;
                for (std::size_t k = 0; k < n; ++k) sum += de.at(c, w * n + k, b);
                out.at(c, w, b) = sum / static_cast<double>(n);
            }
    return out;
}

WindowedDeTensor select_bands(const WindowedDeTensor& wde,
                              const std::vector<std::size_t>& band_indices) {
    if (band_indices.empty())
        throw std::invalid_argument("select_bands: empty selection");
    WindowedDeTensor out;
    out.trial_id = wde.trial_id;
    out.window_seconds = wde.window_seconds;
    out.n_channels = wde.n_channels;
    out.n_windows = wde.n_windows;
    for (std::size_t b : band_indices) {
        if (b >= wde.n_bands())
            throw std::invalid_argument("select_bands: band index out of range");
        out.band_names.push_back(wde.band_names[b]);
    }
    out.values.assign(out.n_channels * out.n_windows * out.n_bands(), 0.0);
    for (std::size_t c = 0; c < out.n_channels; ++c)
        for (std::size_t w = 0; w < out.n_windows; ++w)
            for (std::size_t b = 0; b < band_indices.size(); ++b)
                out.at(c, w, b) = wde.at(c, w, band_indices[b]);
    return out;
}

AsMapTensor asmap_raw(const std::vector<std::vector<double>>& de_slice,
                      const std::vector<std::string>& band_names) {
    const std::size_t n_ch = de_slice.size();
    if (n_ch < 2) throw std::invalid_argument("asmap: need >= 2 channels");
    const std::size_t n_bands = band_names.size();
    AsMapTensor a;
    a.band_names = band_names;
    a.n_channels = n_ch;
    a.normalized = false;
    a.values.assign(n_ch * n_ch * n_bands, 0.0);
    for (std::size_t i = 0; i < n_ch; ++i) {
        if (de_slice[i].size() != n_bands)
            throw std::invalid_argument("asmap: ragged DE slice");
        for (std::size_t j = 0; j < n_ch; ++j)
            for (std::size_t b = 0; b < n_bands; ++b)
                a.at(i, j, b) = de_slice[i][b] - de_slice[j][b];
    }
    return a;
}

AsMapTensor asmap_raw(const WindowedDeTensor& wde, std::size_t window) {
    if (window >= wde.n_windows)
        throw std::invalid_argument("asmap: window index out of range");
    std::vector<std::vector<double>> slice(wde.n_channels,
                                           std::vector<double>(wde.n_bands()));
    for (std::size_t c = 0; c < wde.n_channels; ++c)
        for (std::size_t b = 0; b < wde.n_bands(); ++b)
            slice[c][b] = wde.at(c, window, b);
    return asmap_raw(slice, wde.band_names);
}

AsMapTensor normalize_asmap(const AsMapTensor& raw) {
    if (raw.normalized)
        throw std::invalid_argument("normalize_asmap: input already normalized");
    AsMapTensor out = raw;
    out.normalized = true;
    for (std::size_t b = 0; b < raw.n_bands(); ++b) {
        double lo = raw.at(0, 0, b), hi = lo;
        for (std::size_t i = 0; i < raw.n_channels; ++i)
            for (std::size_t j = 0; j < raw.n_channels; ++j) {
                const double v = raw.at(i, j, b);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        for (std::size_t i = 0; i < raw.n_channels; ++i)
            for (std::size_t j = 0; j < raw.n_channels; ++j)
                out.at(i, j, b) = hi > lo ? (raw.at(i, j, b) - lo) / (hi - lo) : 0.5;
    }
    return out;
}

std::vector<double> feature_dasm(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs) {
    if (pairs.kind != PairingKind::Hemispheric)
        throw std::invalid_argument("feature_dasm: pairing kind must be hemispheric");
    return pairwise_feature(wde, window, pairs, /*ratio=*/false);
}

std::vector<double> feature_rasm(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs) {
    if (pairs.kind != PairingKind::Hemispheric)
        throw std::invalid_argument("feature_rasm: pairing kind must be hemispheric");
    return pairwise_feature(wde, window, pairs, /*ratio=*/true);
}

std::vector<double> feature_dcau(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs) {
    if (pairs.kind != PairingKind::FrontalPosterior)
        throw std::invalid_argument("feature_dcau: pairing kind must be frontal-posterior");
    return pairwise_feature(wde, window, pairs, /*ratio=*/false);
}

std::vector<double> feature_de_flat(const WindowedDeTensor& wde, std::size_t window) {
    if (window >= wde.n_windows)
        throw std::invalid_argument("feature_de_flat: window index out of range");
    std::vector<double> v;
    v.reserve(wde.n_channels * wde.n_bands());
    for (std::size_t b = 0; b < wde.n_bands(); ++b)
        for (std::size_t c = 0; c < wde.n_channels; ++c)
            v.push_back(wde.at(c, window, b));
    return v;
}

}  // namespace asmap
