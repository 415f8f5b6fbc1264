#include "asmap/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asmap {

double Recording::duration_seconds() const {
    return sample_rate_hz == 0 ? 0.0
                               : static_cast<double>(n_samples()) / sample_rate_hz;
}

void Recording::validate() const {
    if (samples.size() < 2)
        throw std::invalid_argument("Recording: channel count must be >= 2");
    if (sample_rate_hz == 0)
        throw std::invalid_argument("Recording: sample_rate_hz must be positive");
    if (!channel_labels.empty() && channel_labels.size() != samples.size())
        throw std::invalid_argument("Recording: channel_labels/samples size mismatch");
    const std::size_t len = samples[0].size();
    for (const auto& row : samples)
        if (row.size() != len)
            throw std::invalid_argument("Recording: ragged channel rows");
}

const std::vector<Band>& canonical_bands() {
    static const std::vector<Band> bands = {
        {"delta", 1.0, 3.0},
        {"theta", 4.0, 7.0},
        {"alpha", 8.0, 13.0},
        {"beta", 14.0, 30.0},
        {"gamma", 31.0, 50.0},
    };
    return bands;
}

Band full_band(double fs_hz) {
    return Band{"full", 1e-9, fs_hz / 2.0};
}

bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

std::vector<double> hanning_window(std::size_t n) {
    if (n < 2) throw std::invalid_argument("hanning_window: n must be >= 2");
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * k / (n - 1)));
    return w;
}

std::vector<Epoch> segment_epochs(const Recording& rec, const SpectralConfig& cfg) {
    rec.validate();
    const auto per_epoch =
        static_cast<std::size_t>(std::llround(cfg.epoch_seconds * rec.sample_rate_hz));
    if (per_epoch == 0)
        throw std::invalid_argument("segment_epochs: epoch_seconds too small");
    const std::size_t n_epochs = rec.n_samples() / per_epoch;
    if (n_epochs == 0)
        throw std::invalid_argument("segment_epochs: recording shorter than one epoch");

    std::vector<Epoch> epochs(n_epochs);
    for (std::size_t e = 0; e < n_epochs; ++e) {
        Epoch ep(rec.n_channels());
        for (std::size_t c = 0; c < rec.n_channels(); ++c) {
            const auto begin = rec.samples[c].begin() + static_cast<long>(e * per_epoch);
            ep[c].assign(begin, begin + static_cast<long>(per_epoch));
        }
        epochs[e] = std::move(ep);
    }
    return epochs;
}

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n))
        throw std::invalid_argument("fft: length must be a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

std::vector<std::complex<double>> fft_real(const std::vector<double>& x, std::size_t n) {
    if (!is_power_of_two(n))
        throw std::invalid_argument("fft_real: n must be a power of two");
    if (x.size() > n)
        throw std::invalid_argument("fft_real: input longer than n");
    std::vector<std::complex<double>> a(n, {0.0, 0.0});
    for (std::size_t t = 0; t < x.size(); ++t) a[t] = {x[t], 0.0};
    fft_inplace(a, false);
    a.resize(n / 2 + 1);
    return a;
}

EpochPeriodogram periodogram(const Epoch& epoch, const SpectralConfig& cfg, double fs_hz) {
    if (epoch.empty()) throw std::invalid_argument("periodogram: empty epoch");
    const std::size_t m = epoch[0].size();
    if (m > cfg.fft_len)
        throw std::invalid_argument("periodogram: epoch longer than fft_len");
    if (!is_power_of_two(cfg.fft_len))
        throw std::invalid_argument("periodogram: fft_len must be a power of two");

    const std::vector<double> w = hanning_window(m);
    double u = 0.0;  // mean squared window coefficient
    for (double c : w) u += c * c;
    u /= static_cast<double>(m);

    const std::size_t n = cfg.fft_len;
    const double norm = static_cast<double>(n) * static_cast<double>(m) * u;

    EpochPeriodogram pg;
    pg.bin_hz = fs_hz / static_cast<double>(n);
    pg.power.resize(epoch.size());
    std::vector<double> y(m);
    for (std::size_t c = 0; c < epoch.size(); ++c) {
        if (epoch[c].size() != m)
            throw std::invalid_argument("periodogram: ragged epoch");
        for (std::size_t t = 0; t < m; ++t) y[t] = epoch[c][t] * w[t];
        const auto spec = fft_real(y, n);
        auto& p = pg.power[c];
        p.resize(spec.size());
        for (std::size_t k = 0; k < spec.size(); ++k) {
            const double scale = (k == 0 || k == n / 2) ? 1.0 : 2.0;
            p[k] = scale * std::norm(spec[k]) / norm;
        }
    }
    return pg;
}

std::vector<double> band_power(const EpochPeriodogram& pg, const Band& band, double fs_hz) {
    if (band.lo_hz >= band.hi_hz)
        throw std::invalid_argument("band_power: lo_hz must be below hi_hz");
    if (band.lo_hz > fs_hz / 2.0)
        throw std::invalid_argument("band_power: band '" + band.name +
                                    "' lies entirely above Nyquist");
    const std::size_t n_bins = pg.n_bins();
    std::size_t count = 0;
    std::vector<double> out(pg.power.size(), 0.0);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * pg.bin_hz;
        if (f < band.lo_hz || f > band.hi_hz) continue;
        ++count;
        for (std::size_t c = 0; c < pg.power.size(); ++c) out[c] += pg.power[c][k];
    }
    if (count == 0)
        throw std::invalid_argument("band_power: band '" + band.name +
                                    "' selects no bins");
    return out;
}

}  // namespace asmap
