#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace demonsonar {

/// Writes a binary portable graymap (P5, maxval 255). `rows` must be
/// non-empty and rectangular.
void write_pgm(const std::filesystem::path& path,
               const std::vector<std::vector<std::uint8_t>>& rows);

} // namespace demonsonar
