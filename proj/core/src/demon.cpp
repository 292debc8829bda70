#include "demonsonar/demon.hpp"

#include "demonsonar/dsp_core.hpp"
#include "demonsonar/errors.hpp"
#include "demonsonar/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace demonsonar {

namespace {

struct ResolvedBand {
    double lo_hz;
    double hi_hz;
};

ResolvedBand resolve_carrier_band(const DemonConfig& config, double sample_rate_hz) {
    ResolvedBand band;
    band.lo_hz = config.carrier_lo_hz > 0.0 ? config.carrier_lo_hz : 0.1 * sample_rate_hz;
    band.hi_hz = config.carrier_hi_hz > 0.0 ? config.carrier_hi_hz : 0.45 * sample_rate_hz;
    if (!(0.0 < band.lo_hz && band.lo_hz < band.hi_hz && band.hi_hz < sample_rate_hz / 2.0)) {
        throw ContractError("demon: carrier band [" + std::to_string(band.lo_hz) + ", " +
                            std::to_string(band.hi_hz) + "] must satisfy 0 < lo < hi < rate/2");
    }
    return band;
}

} // namespace

DemonSpectrum demon_spectrum(const SampleBuffer& buffer, const DemonConfig& config) {
    if (buffer.samples.empty()) {
        throw ContractError("demon_spectrum: buffer is empty");
    }
    if (!(buffer.sample_rate_hz > 0.0)) {
        throw ContractError("demon_spectrum: sample rate must be positive");
    }
    if (!(config.envelope_rate_hz > 0.0)) {
        throw ContractError("demon_spectrum: envelope rate must be positive");
    }
    const ResolvedBand band = resolve_carrier_band(config, buffer.sample_rate_hz);

    const int factor =
        std::max(1, static_cast<int>(std::llround(buffer.sample_rate_hz / config.envelope_rate_hz)));
    const double envelope_rate = buffer.sample_rate_hz / factor;
    if (!(config.max_line_hz <= envelope_rate / 2.0)) {
        throw ContractError("demon_spectrum: max_line_hz " + std::to_string(config.max_line_hz) +
                            " exceeds the envelope Nyquist " + std::to_string(envelope_rate / 2.0));
    }

    // The decimated envelope must still hold one Welch frame.
    const std::size_t min_samples =
        (config.frame_len - 1) * static_cast<std::size_t>(factor) + 1;
    const std::size_t min_for_filter =
        std::max(config.bandpass_taps, 4 * static_cast<std::size_t>(factor) + 1);
    if (buffer.samples.size() < std::max(min_samples, min_for_filter)) {
        const double min_s = static_cast<double>(std::max(min_samples, min_for_filter)) /
                             buffer.sample_rate_hz;
        throw ContractError("demon_spectrum: buffer too short; need at least " +
                            std::to_string(min_s) + " s at this rate/config");
    }

    const FirFilter carrier = design_fir(FilterKind::bandpass, band.lo_hz, band.hi_hz,
                                         buffer.sample_rate_hz, config.bandpass_taps);
    const std::vector<double> carrier_band = filter_apply(carrier, buffer.samples);
    const std::vector<double> envelope = square_law_envelope(carrier_band);
    DecimateResult reduced = decimate(envelope, buffer.sample_rate_hz, factor);

    double mean = 0.0;
    for (double v : reduced.samples) {
        mean += v;
    }
    mean /= static_cast<double>(reduced.samples.size());
    for (double& v : reduced.samples) {
        v -= mean;
    }

    PowerSpectrum welch = welch_spectrum(reduced.samples, reduced.sample_rate_hz,
                                         config.frame_len, config.overlap_frac, WindowKind::hann);

    DemonSpectrum spectrum;
    spectrum.bin_hz = welch.bin_hz;
    spectrum.source_duration_s = buffer.duration_s();
    spectrum.magnitudes = std::move(welch.magnitudes);
    spectrum.magnitudes[0] = 0.0;
    const double peak = *std::max_element(spectrum.magnitudes.begin(), spectrum.magnitudes.end());
    if (peak > 0.0) {
        for (double& m : spectrum.magnitudes) {
            m /= peak;
        }
    }
    return spectrum;
}

DemonGram demon_gram(const SampleBuffer& buffer, const DemonConfig& config, double slice_s) {
    if (!(buffer.sample_rate_hz > 0.0)) {
        throw ContractError("demon_gram: sample rate must be positive");
    }
    const double frame_duration =
        static_cast<double>(config.frame_len) / config.envelope_rate_hz;
    if (!(slice_s >= frame_duration)) {
        throw ContractError("demon_gram: slice of " + std::to_string(slice_s) +
                            " s is shorter than one envelope frame (" +
                            std::to_string(frame_duration) + " s)");
    }
    const std::size_t slice_len =
        static_cast<std::size_t>(std::llround(slice_s * buffer.sample_rate_hz));
    if (slice_len == 0 || buffer.samples.size() < slice_len) {
        throw ContractError("demon_gram: buffer (" + std::to_string(buffer.duration_s()) +
                            " s) is shorter than one slice (" + std::to_string(slice_s) + " s)");
    }

    DemonGram gram;
    gram.slice_duration_s = slice_s;
    const std::size_t n_slices = buffer.samples.size() / slice_len;
    for (std::size_t s = 0; s < n_slices; ++s) {
        SampleBuffer slice;
        slice.sample_rate_hz = buffer.sample_rate_hz;
        slice.samples.assign(buffer.samples.begin() + static_cast<std::ptrdiff_t>(s * slice_len),
                             buffer.samples.begin() + static_cast<std::ptrdiff_t>((s + 1) * slice_len));
        DemonSpectrum spectrum = demon_spectrum(slice, config);
        gram.bin_hz = spectrum.bin_hz;
        gram.rows.push_back(std::move(spectrum.magnitudes));
    }
    return gram;
}

void render_demon_gram(const DemonGram& gram, const std::filesystem::path& path) {
    if (gram.rows.empty()) {
        throw ContractError("render_demon_gram: gram has no rows");
    }
    std::vector<std::vector<std::uint8_t>> pixels;
    pixels.reserve(gram.rows.size());
    for (const auto& row : gram.rows) {
        std::vector<std::uint8_t> px(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double v = std::clamp(row[i], 0.0, 1.0);
            px[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
        pixels.push_back(std::move(px));
    }
    write_pgm(path, pixels);

    std::filesystem::path sidecar = path;
    sidecar.replace_extension(".txt");
    std::ofstream meta(sidecar);
    if (!meta) {
        throw IoError("cannot open '" + sidecar.string() + "' for writing");
    }
    char line[128];
    std::snprintf(line, sizeof(line), "bin_hz=%.17g\n", gram.bin_hz);
    meta << line;
    std::snprintf(line, sizeof(line), "slice_duration_s=%.17g\n", gram.slice_duration_s);
    meta << line;
    meta << "rows=" << gram.rows.size() << "\n";
    meta << "bins=" << gram.rows.front().size() << "\n";
    meta.flush();
    if (!meta) {
        throw IoError("failed while writing '" + sidecar.string() + "'");
    }
}

} // namespace demonsonar
