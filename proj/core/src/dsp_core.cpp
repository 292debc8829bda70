#include "demonsonar/dsp_core.hpp"

#include "demonsonar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace demonsonar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(std::span<const double> signal, const char* op) {
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (!std::isfinite(signal[i])) {
            throw ValidationError(std::string(op) + ": sample " + std::to_string(i) +
                                  " is not finite");
        }
    }
}

void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(a[i], a[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -kTwoPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace

bool is_power_of_two(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

ComplexSpectrum dft_naive(std::span<const double> signal) {
    if (signal.empty()) {
        throw ContractError("dft_naive: signal must be non-empty");
    }
    require_finite(signal, "dft_naive");
    const std::size_t n = signal.size();
    ComplexSpectrum spectrum;
    spectrum.bins.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            // reduce k*m mod N before the trig call to keep the angle small
            const std::size_t km = (k * m) % n;
            const double angle = -kTwoPi * static_cast<double>(km) / static_cast<double>(n);
            acc += signal[m] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        spectrum.bins[k] = acc;
    }
    return spectrum;
}

ComplexSpectrum fft(std::span<const double> signal) {
    if (!is_power_of_two(signal.size())) {
        throw ContractError("fft: length " + std::to_string(signal.size()) +
                            " is not a power of two");
    }
    ComplexSpectrum spectrum;
    spectrum.bins.assign(signal.begin(), signal.end());
    fft_inplace(spectrum.bins);
    return spectrum;
}

std::vector<double> make_window(std::size_t n, WindowKind kind) {
    std::vector<double> w(n, 1.0);
    if (kind == WindowKind::hann && n > 1) {
        // mirror the first half so the window is exactly symmetric
        for (std::size_t i = 0; i <= (n - 1) / 2; ++i) {
            const double v =
                0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1)));
            w[i] = v;
            w[n - 1 - i] = v;
        }
    }
    return w;
}

std::vector<double> apply_window(std::span<const double> frame, WindowKind kind) {
    if (frame.empty()) {
        throw ContractError("apply_window: frame must be non-empty");
    }
    std::vector<double> out(frame.begin(), frame.end());
    if (kind == WindowKind::hann) {
        const std::vector<double> w = make_window(frame.size(), kind);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] *= w[i];
        }
    }
    return out;
}

FirFilter design_fir(FilterKind kind, double f_lo_hz, double f_hi_hz, double sample_rate_hz,
                     std::size_t n_taps) {
    if (n_taps < 11 || n_taps % 2 == 0) {
        throw ContractError("design_fir: tap count must be odd and >= 11, got " +
                            std::to_string(n_taps));
    }
    if (!(sample_rate_hz > 0.0)) {
        throw ContractError("design_fir: sample rate must be positive");
    }
    const double nyquist = sample_rate_hz / 2.0;
    if (kind == FilterKind::bandpass) {
        if (!(0.0 < f_lo_hz && f_lo_hz < f_hi_hz && f_hi_hz < nyquist)) {
            throw ContractError("design_fir: bandpass requires 0 < f_lo < f_hi < rate/2");
        }
    } else {
        if (!(0.0 < f_hi_hz && f_hi_hz < nyquist)) {
            throw ContractError("design_fir: lowpass requires 0 < cutoff < rate/2");
        }
    }

    const std::size_t center = (n_taps - 1) / 2;
    const auto ideal_lowpass = [&](double fc, std::size_t i) {
        const double x = static_cast<double>(i) - static_cast<double>(center);
        if (x == 0.0) {
            return 2.0 * fc / sample_rate_hz;
        }
        return std::sin(kTwoPi * fc * x / sample_rate_hz) / (std::numbers::pi * x);
    };

    FirFilter filter;
    filter.kind = kind;
    filter.f_lo_hz = kind == FilterKind::bandpass ? f_lo_hz : 0.0;
    filter.f_hi_hz = f_hi_hz;
    filter.taps.resize(n_taps);
    const std::vector<double> window = make_window(n_taps, WindowKind::hann);
    for (std::size_t i = 0; i <= center; ++i) {
        double h = ideal_lowpass(f_hi_hz, i);
        if (kind == FilterKind::bandpass) {
            h -= ideal_lowpass(f_lo_hz, i);
        }
        const double tap = h * window[i];
        filter.taps[i] = tap;
        filter.taps[n_taps - 1 - i] = tap;
    }
    return filter;
}

std::vector<double> filter_apply(const FirFilter& filter, std::span<const double> signal) {
    const std::size_t t = filter.taps.size();
    const std::size_t n = signal.size();
    if (n < t) {
        throw ContractError("filter_apply: signal length " + std::to_string(n) +
                            " is shorter than the filter (" + std::to_string(t) + " taps)");
    }
    const std::size_t center = (t - 1) / 2;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // y[i] = sum_j taps[j] * x[i + center - j], zero outside the signal
        const std::size_t shifted = i + center;
        const std::size_t j_lo = shifted >= n ? shifted - (n - 1) : 0;
        const std::size_t j_hi = std::min(t - 1, shifted);
        double acc = 0.0;
        for (std::size_t j = j_lo; j <= j_hi; ++j) {
            acc += filter.taps[j] * signal[shifted - j];
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> square_law_envelope(std::span<const double> signal) {
    std::vector<double> out(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) {
        out[i] = signal[i] * signal[i];
    }
    return out;
}

DecimateResult decimate(std::span<const double> signal, double sample_rate_hz, int factor) {
    if (factor < 1) {
        throw ContractError("decimate: factor must be >= 1, got " + std::to_string(factor));
    }
    if (!(sample_rate_hz > 0.0)) {
        throw ContractError("decimate: sample rate must be positive");
    }
    DecimateResult result;
    result.sample_rate_hz = sample_rate_hz / factor;
    if (factor == 1) {
        result.samples.assign(signal.begin(), signal.end());
        return result;
    }
    const std::size_t n_taps = std::max<std::size_t>(11, 4 * static_cast<std::size_t>(factor) + 1);
    const FirFilter aa =
        design_fir(FilterKind::lowpass, 0.0, 0.45 * result.sample_rate_hz, sample_rate_hz, n_taps);
    const std::vector<double> filtered = filter_apply(aa, signal);
    result.samples.reserve(filtered.size() / factor + 1);
    for (std::size_t i = 0; i < filtered.size(); i += static_cast<std::size_t>(factor)) {
        result.samples.push_back(filtered[i]);
    }
    return result;
}

PowerSpectrum welch_spectrum(std::span<const double> signal, double sample_rate_hz,
                             std::size_t frame_len, double overlap_frac, WindowKind window) {
    if (!is_power_of_two(frame_len)) {
        throw ContractError("welch_spectrum: frame_len must be a power of two");
    }
    if (signal.size() < frame_len) {
        throw ContractError("welch_spectrum: signal (" + std::to_string(signal.size()) +
                            " samples) is shorter than one frame (" + std::to_string(frame_len) +
                            ")");
    }
    if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) {
        throw ContractError("welch_spectrum: overlap must be in [0, 1)");
    }
    if (!(sample_rate_hz > 0.0)) {
        throw ContractError("welch_spectrum: sample rate must be positive");
    }

    const std::vector<double> win = make_window(frame_len, window);
    double window_energy = 0.0;
    for (double w : win) {
        window_energy += w * w;
    }

    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(frame_len) * (1.0 - overlap_frac))));

    PowerSpectrum spectrum;
    spectrum.bin_hz = sample_rate_hz / static_cast<double>(frame_len);
    spectrum.magnitudes.assign(frame_len / 2 + 1, 0.0);

    std::size_t n_frames = 0;
    std::vector<std::complex<double>> frame(frame_len);
    for (std::size_t start = 0; start + frame_len <= signal.size(); start += hop) {
        for (std::size_t i = 0; i < frame_len; ++i) {
            frame[i] = signal[start + i] * win[i];
        }
        fft_inplace(frame);
        for (std::size_t k = 0; k < spectrum.magnitudes.size(); ++k) {
            spectrum.magnitudes[k] += std::norm(frame[k]);
        }
        ++n_frames;
    }

    const double scale = 1.0 / (static_cast<double>(n_frames) * static_cast<double>(frame_len) *
                                window_energy);
    for (double& m : spectrum.magnitudes) {
        m *= scale;
    }
    return spectrum;
}

} // namespace demonsonar
