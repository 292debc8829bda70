#include "demonsonar/audio_io.hpp"

#include "demonsonar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace demonsonar {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

double decode_sample(const unsigned char* p, std::uint16_t bits, std::uint16_t format) {
    if (format == kFormatIeeeFloat) {
        float f;
        std::memcpy(&f, p, 4);
        return static_cast<double>(f);
    }
    switch (bits) {
        case 8:
            // 8-bit PCM is unsigned with midpoint 128.
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16: {
            const std::int16_t v = static_cast<std::int16_t>(read_u16(p));
            return v / 32768.0;
        }
        case 24: {
            std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
            if (v & 0x800000) {
                v |= ~0xFFFFFF; // sign-extend
            }
            return v / 8388608.0;
        }
        case 32: {
            const std::int32_t v = static_cast<std::int32_t>(read_u32(p));
            return v / 2147483648.0;
        }
        default:
            return 0.0;
    }
}

} // namespace

SampleBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 12 || std::memcmp(data, "RIFF", 4) != 0) {
        throw FormatError("'" + path.string() + "': missing RIFF chunk");
    }
    if (std::memcmp(data + 8, "WAVE", 4) != 0) {
        throw FormatError("'" + path.string() + "': missing WAVE form type");
    }

    bool have_fmt = false;
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_size = 0;

    std::size_t off = 12;
    while (off + 8 <= size) {
        char id[5] = {0};
        std::memcpy(id, data + off, 4);
        const std::uint32_t chunk_size = read_u32(data + off + 4);
        const std::size_t body = off + 8;
        if (body + chunk_size > size) {
            throw FormatError("'" + path.string() + "': chunk '" + id + "' overruns the file");
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_size < 16) {
                throw FormatError("'" + path.string() + "': 'fmt ' chunk too short");
            }
            format = read_u16(data + body);
            channels = read_u16(data + body + 2);
            rate = read_u32(data + body + 4);
            bits = read_u16(data + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            pcm = data + body;
            pcm_size = chunk_size;
            break; // fmt is required to precede data in canonical files
        }
        off = body + chunk_size + (chunk_size & 1); // chunks are word-aligned
    }

    if (!have_fmt) {
        throw FormatError("'" + path.string() + "': missing 'fmt ' chunk");
    }
    if (pcm == nullptr) {
        throw FormatError("'" + path.string() + "': missing 'data' chunk");
    }
    if (format != kFormatPcm && format != kFormatIeeeFloat) {
        throw FormatError("'" + path.string() + "': unsupported codec tag " + std::to_string(format));
    }
    if (format == kFormatIeeeFloat && bits != 32) {
        throw FormatError("'" + path.string() + "': float WAV must be 32-bit, got " +
                          std::to_string(bits));
    }
    if (format == kFormatPcm && bits != 8 && bits != 16 && bits != 24 && bits != 32) {
        throw FormatError("'" + path.string() + "': unsupported PCM bit depth " +
                          std::to_string(bits));
    }
    if (channels == 0) {
        throw FormatError("'" + path.string() + "': 'fmt ' declares zero channels");
    }
    if (rate == 0) {
        throw FormatError("'" + path.string() + "': 'fmt ' declares zero sample rate");
    }
    if (pcm_size == 0) {
        throw FormatError("'" + path.string() + "': 'data' chunk is empty (no audio)");
    }

    const std::size_t bytes_per = bits / 8;
    const std::size_t frame_bytes = bytes_per * channels;
    const std::size_t frames = pcm_size / frame_bytes;
    if (frames == 0) {
        throw FormatError("'" + path.string() + "': 'data' chunk holds no complete frame");
    }

    SampleBuffer buffer;
    buffer.sample_rate_hz = static_cast<double>(rate);
    buffer.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        const unsigned char* frame = pcm + f * frame_bytes;
        for (std::size_t c = 0; c < channels; ++c) {
            acc += decode_sample(frame + c * bytes_per, bits, format);
        }
        buffer.samples[f] = acc / channels;
    }
    return buffer;
}

void write_wav(const SampleBuffer& buffer, const std::filesystem::path& path) {
    if (!(buffer.sample_rate_hz > 0.0) || !std::isfinite(buffer.sample_rate_hz)) {
        throw ContractError("write_wav: sample rate must be positive and finite");
    }
    for (std::size_t i = 0; i < buffer.samples.size(); ++i) {
        if (!std::isfinite(buffer.samples[i])) {
            throw ValidationError("write_wav: sample " + std::to_string(i) + " is not finite");
        }
    }

    const std::uint32_t n = static_cast<std::uint32_t>(buffer.samples.size());
    const std::uint32_t data_bytes = n * 2;
    const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(buffer.sample_rate_hz));

    std::string out;
    out.reserve(44 + data_bytes);
    out.append("RIFF");
    put_u32(out, 36 + data_bytes);
    out.append("WAVE");
    out.append("fmt ");
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1); // mono
    put_u32(out, rate);
    put_u32(out, rate * 2); // byte rate
    put_u16(out, 2);        // block align
    put_u16(out, 16);       // bits per sample
    out.append("data");
    put_u32(out, data_bytes);
    for (double x : buffer.samples) {
        const double clamped = std::clamp(x, -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(q));
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    file.flush();
    if (!file) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

} // namespace demonsonar
