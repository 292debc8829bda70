#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace demonsonar {

/// Full (two-sided) complex spectrum; bins.size() equals the input length.
struct ComplexSpectrum {
    std::vector<std::complex<double>> bins;
};

/// One-sided averaged power spectrum: bins 0 .. frame_len/2.
struct PowerSpectrum {
    std::vector<double> magnitudes;
    double bin_hz = 0.0;
};

enum class WindowKind { rectangular, hann };
enum class FilterKind { lowpass, bandpass };

/// Linear-phase FIR filter: odd tap count, taps symmetric about the center.
struct FirFilter {
    std::vector<double> taps;
    FilterKind kind = FilterKind::lowpass;
    double f_lo_hz = 0.0; // 0 for lowpass
    double f_hi_hz = 0.0;
};

bool is_power_of_two(std::size_t n);

/// Direct O(N^2) DFT: X[k] = sum_n x[n] * exp(-2*pi*i*k*n/N).
/// Slow on purpose; serves as the reference the FFT is checked against.
ComplexSpectrum dft_naive(std::span<const double> signal);

/// Radix-2 iterative FFT. Length must be a power of two (callers zero-pad).
ComplexSpectrum fft(std::span<const double> signal);

std::vector<double> make_window(std::size_t n, WindowKind kind);

/// Elementwise product with the window of matching length.
std::vector<double> apply_window(std::span<const double> frame, WindowKind kind);

/// Windowed-sinc design (hann-windowed ideal response). n_taps odd, >= 11.
/// Lowpass uses f_hi_hz only; bandpass needs 0 < f_lo < f_hi < rate/2.
FirFilter design_fir(FilterKind kind, double f_lo_hz, double f_hi_hz,
                     double sample_rate_hz, std::size_t n_taps);

/// Direct convolution with group-delay compensation: the output has the
/// input's length and a passband sinusoid stays phase-aligned. Edges see
/// zero-padding.
std::vector<double> filter_apply(const FirFilter& filter, std::span<const double> signal);

/// y[n] = x[n]^2, the classical square-law detector.
std::vector<double> square_law_envelope(std::span<const double> signal);

struct DecimateResult {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
};

/// Anti-alias lowpass at 0.45*(rate/factor), then keep every factor-th
/// sample. factor == 1 is the identity (no filter).
DecimateResult decimate(std::span<const double> signal, double sample_rate_hz, int factor);

/// Welch-averaged one-sided power spectrum: mean over hopped frames of
/// |fft(window .* frame)|^2 / (frame_len * sum(window^2)).
PowerSpectrum welch_spectrum(std::span<const double> signal, double sample_rate_hz,
                             std::size_t frame_len, double overlap_frac, WindowKind window);

} // namespace demonsonar
