#pragma once

#include <filesystem>
#include <vector>

namespace demonsonar {

/// Mono sampled signal. Amplitudes are dimensionless, nominally in [-1, 1].
/// Buffers are immutable once built and safe to share across threads.
struct SampleBuffer {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;

    double duration_s() const {
        return sample_rate_hz > 0.0
                   ? static_cast<double>(samples.size()) / sample_rate_hz
                   : 0.0;
    }
};

/// Reads a RIFF/WAVE file. Accepts integer PCM (8/16/24/32-bit) and 32-bit
/// float, any channel count and rate. Channels are averaged to mono and
/// integer samples are scaled to [-1, 1] by the type's max magnitude
/// (e.g. int16 / 32768).
SampleBuffer read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM with the canonical 44-byte header. Samples are
/// clamped to [-1, 1] and quantized by round(x * 32767).
void write_wav(const SampleBuffer& buffer, const std::filesystem::path& path);

} // namespace demonsonar
