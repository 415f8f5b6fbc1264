#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace asmap {

// Trial label: either a discrete class tag, a (valence, arousal) rating
// pair on [1, 9], or both.
struct LabelInfo {
    std::optional<std::string> class_tag;
    std::optional<double> valence;
    std::optional<double> arousal;
};

// Multichannel time-domain EEG trial.
struct Recording {
    std::string trial_id;
    std::string subject_id;
    std::vector<std::string> channel_labels;
    unsigned sample_rate_hz = 0;
    std::vector<std::vector<double>> samples;  // [channel][time], microvolts
    LabelInfo label;

    std::size_t n_channels() const { return samples.size(); }
    std::size_t n_samples() const { return samples.empty() ? 0 : samples[0].size(); }
    double duration_seconds() const;

    // Throws std::invalid_argument on violated invariants (channel count < 2,
    // ragged channel rows, non-positive sample rate).
    void validate() const;
};

struct SpectralConfig {
    std::size_t fft_len = 256;      // power of two, >= epoch sample count
    double epoch_seconds = 1.0;     // non-overlapping Hanning-windowed epochs
};

struct Band {
    std::string name;
    double lo_hz = 0.0;  // inclusive
    double hi_hz = 0.0;  // inclusive
};

// delta [1,3], theta [4,7], alpha [8,13], beta [14,30], gamma [31,50]
const std::vector<Band>& canonical_bands();

// Band covering (0, fs/2]; excludes the DC bin.
Band full_band(double fs_hz);

// One-sided power spectrum per channel, bins 0..fft_len/2, bin k centered
// at k*fs/fft_len Hz. Variance-calibrated: the bin sum equals the variance
// of the window-corrected epoch.
struct EpochPeriodogram {
    double bin_hz = 0.0;
    std::vector<std::vector<double>> power;  // [channel][bin]
    std::size_t n_bins() const { return power.empty() ? 0 : power[0].size(); }
};

using Epoch = std::vector<std::vector<double>>;  // [channel][time]

// w[k] = 0.5*(1 - cos(2*pi*k/(n-1))); symmetric, zero endpoints. n >= 2.
std::vector<double> hanning_window(std::size_t n);

// Contiguous, non-overlapping, time-ordered epochs of epoch_seconds each;
// trailing partial epoch discarded. Throws if shorter than one epoch.
std::vector<Epoch> segment_epochs(const Recording& rec, const SpectralConfig& cfg);

// In-place radix-2 FFT; a.size() must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Zero-pads x to n (power of two) and returns bins 0..n/2 of the unnormalized
// DFT: bin k = sum_t x[t]*exp(-i*2*pi*k*t/n).
std::vector<std::complex<double>> fft_real(const std::vector<double>& x, std::size_t n);

// Hanning-windowed, zero-padded, one-sided periodogram of a single epoch.
// m = samples per channel must satisfy m <= cfg.fft_len.
EpochPeriodogram periodogram(const Epoch& epoch, const SpectralConfig& cfg, double fs_hz);

// Sum of bin powers with bin-center frequency in [lo_hz, hi_hz], per channel.
// Throws if the band lies entirely above Nyquist or selects no bins.
std::vector<double> band_power(const EpochPeriodogram& pg, const Band& band, double fs_hz);

bool is_power_of_two(std::size_t n);

}  // namespace asmap
