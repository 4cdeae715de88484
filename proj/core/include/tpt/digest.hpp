#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tpt {

// Lowercase hex SHA-256 of raw bytes.
std::string sha256_hex(std::string_view bytes);

// Lowercase hex SHA-256 of a file's raw bytes. Throws IoError if the file
// cannot be read.
std::string digest_file(const std::filesystem::path& path);

}  // namespace tpt
