#pragma once

#include "demonsonar/audio_io.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace demonsonar {

/// Parameters of the DEMON pipeline. Carrier band edges of 0 resolve to
/// 0.1 / 0.45 of the input sample rate at analysis time.
struct DemonConfig {
    double carrier_lo_hz = 0.0;
    double carrier_hi_hz = 0.0;
    double envelope_rate_hz = 200.0;
    std::size_t frame_len = 1024;
    double overlap_frac = 0.5;
    double max_line_hz = 100.0;
    std::size_t bandpass_taps = 127;
};

/// Envelope line spectrum, peak-normalized to 1 with the DC bin forced to 0.
struct DemonSpectrum {
    std::vector<double> magnitudes;
    double bin_hz = 0.0;
    double source_duration_s = 0.0;
};

/// Time-stacked envelope spectra, one row per consecutive slice.
struct DemonGram {
    std::vector<std::vector<double>> rows;
    double slice_duration_s = 0.0;
    double bin_hz = 0.0;
};

/// bandpass(carrier band) -> square-law envelope -> decimate to the
/// envelope rate -> remove mean -> Welch (hann) -> zero DC -> peak-normalize.
DemonSpectrum demon_spectrum(const SampleBuffer& buffer, const DemonConfig& config);

/// Splits the buffer into non-overlapping slices of slice_s seconds and runs
/// demon_spectrum on each. A trailing partial slice is discarded.
DemonGram demon_gram(const SampleBuffer& buffer, const DemonConfig& config, double slice_s);

/// Renders the gram as a P5 graymap (pixel = round(255 * magnitude), one
/// image row per slice) plus a `key=value` sidecar with the axis metadata.
void render_demon_gram(const DemonGram& gram, const std::filesystem::path& path);

} // namespace demonsonar
