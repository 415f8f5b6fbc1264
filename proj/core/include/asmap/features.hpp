#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "asmap/signal.hpp"

namespace asmap {

// Differential entropy per channel x epoch x band, in nats.
struct DeTensor {
    std::string trial_id;
    std::vector<std::string> band_names;  // ordered delta -> gamma
    double epoch_seconds = 1.0;
    std::size_t n_channels = 0;
    std::size_t n_epochs = 0;
    std::vector<double> values;  // [channel][epoch][band], row-major

    double& at(std::size_t c, std::size_t e, std::size_t b) {
        return values[(c * n_epochs + e) * band_names.size() + b];
    }
    double at(std::size_t c, std::size_t e, std::size_t b) const {
        return values[(c * n_epochs + e) * band_names.size() + b];
    }
    std::size_t n_bands() const { return band_names.size(); }
};

// DE averaged over fixed, non-overlapping windows of consecutive epochs.
struct WindowedDeTensor {
    std::string trial_id;
    std::vector<std::string> band_names;
    double window_seconds = 0.0;
    std::size_t n_channels = 0;
    std::size_t n_windows = 0;
    std::vector<double> values;  // [channel][window][band]

    double& at(std::size_t c, std::size_t w, std::size_t b) {
        return values[(c * n_windows + w) * band_names.size() + b];
    }
    double at(std::size_t c, std::size_t w, std::size_t b) const {
        return values[(c * n_windows + w) * band_names.size() + b];
    }
    std::size_t n_bands() const { return band_names.size(); }
};

// channels x channels x bands pairwise DE-difference map for one window.
// Raw: A[i][j][k] = DE(i,k) - DE(j,k). Normalized: each band slice min-max
// scaled to [0,1] (degenerate all-equal slice -> all 0.5).
struct AsMapTensor {
    std::vector<std::string> band_names;
    std::size_t n_channels = 0;
    bool normalized = false;
    std::vector<double> values;  // [i][j][band]

    double& at(std::size_t i, std::size_t j, std::size_t b) {
        return values[(i * n_channels + j) * band_names.size() + b];
    }
    double at(std::size_t i, std::size_t j, std::size_t b) const {
        return values[(i * n_channels + j) * band_names.size() + b];
    }
    std::size_t n_bands() const { return band_names.size(); }
};

enum class PairingKind { Hemispheric, FrontalPosterior };

struct ChannelPairing {
    PairingKind kind = PairingKind::Hemispheric;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (a, b) indices
};

// Parses a pairing file (one `LABEL_A LABEL_B` per line, '#' comments) and
// resolves labels against the given channel order.
ChannelPairing load_pairing(const std::string& path, PairingKind kind,
                            const std::vector<std::string>& channel_labels);

// Shipped montage pairings for the 62-channel and 32-channel 10-20 layouts;
// falls back to an index-based convention (left block vs right block for
// hemispheric, outer-in mirror for frontal-posterior) on unknown montages.
ChannelPairing default_pairing(PairingKind kind,
                               const std::vector<std::string>& channel_labels);

// DE[c][e][k] = 0.5*ln(2*pi*e * P) with P the epoch band power, floored at
// 1e-12 before the log.
DeTensor compute_de(const Recording& rec, const std::vector<Band>& bands,
                    const SpectralConfig& cfg);

// Centered moving average along the epoch axis; the window truncates at the
// boundaries. span must be odd; span = 1 is the identity.
DeTensor smooth_moving_average(const DeTensor& de, std::size_t span);

// Arithmetic mean of every n = window_seconds/epoch_seconds consecutive
// epochs; trailing partial window dropped. window_seconds must be an integer
// multiple of epoch_seconds.
WindowedDeTensor window_average(const DeTensor& de, double window_seconds);

// Keeps only the listed band axes (indices into wde.band_names).
WindowedDeTensor select_bands(const WindowedDeTensor& wde,
                              const std::vector<std::size_t>& band_indices);

// Raw AsMap of one window slice.
AsMapTensor asmap_raw(const WindowedDeTensor& wde, std::size_t window);

// Raw AsMap of a bare [channel][band] DE slice.
AsMapTensor asmap_raw(const std::vector<std::vector<double>>& de_slice,
                      const std::vector<std::string>& band_names);

// Per-band min-max scaling to [0,1]; requires !raw.normalized.
AsMapTensor normalize_asmap(const AsMapTensor& raw);

// Baseline feature vectors for one window, band-major concatenation.
std::vector<double> feature_dasm(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs);
std::vector<double> feature_rasm(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs);
std::vector<double> feature_dcau(const WindowedDeTensor& wde, std::size_t window,
                                 const ChannelPairing& pairs);
std::vector<double> feature_de_flat(const WindowedDeTensor& wde, std::size_t window);

}  // namespace asmap
