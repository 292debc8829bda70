#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace test_helpers {

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("demonsonar_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void append_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

/// Hand-rolled WAV emitter for reader tests (any format tag / layout).
inline void write_raw_wav(const std::filesystem::path& path, std::uint16_t format_tag,
                          std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                          const std::string& payload) {
    std::string out;
    out.append("RIFF");
    append_u32(out, static_cast<std::uint32_t>(36 + payload.size()));
    out.append("WAVE");
    out.append("fmt ");
    append_u32(out, 16);
    append_u16(out, format_tag);
    append_u16(out, channels);
    append_u32(out, rate);
    append_u32(out, rate * channels * bits / 8);
    append_u16(out, static_cast<std::uint16_t>(channels * bits / 8));
    append_u16(out, bits);
    out.append("data");
    append_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.append(payload);
    std::ofstream file(path, std::ios::binary);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace test_helpers
