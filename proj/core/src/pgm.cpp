#include "demonsonar/pgm.hpp"

#include "demonsonar/errors.hpp"

#include <fstream>
#include <string>

namespace demonsonar {

void write_pgm(const std::filesystem::path& path,
               const std::vector<std::vector<std::uint8_t>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        throw ContractError("write_pgm: image must have at least one pixel");
    }
    const std::size_t width = rows.front().size();
    for (const auto& row : rows) {
        if (row.size() != width) {
            throw ContractError("write_pgm: rows must all have the same length");
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << "P5\n" << width << " " << rows.size() << "\n255\n";
    for (const auto& row : rows) {
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    out.flush();
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

} // namespace demonsonar
