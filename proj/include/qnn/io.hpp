#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace qnn {

// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

std::string format_real(double v);  // 17 significant digits

}  // namespace qnn
