#ifndef ITL_SHA256_HPP
#define ITL_SHA256_HPP

#include <cstddef>
#include <filesystem>
#include <string>

namespace itl {

/// Hex-encoded SHA-256 of a byte range.
std::string sha256_hex(const void* data, std::size_t len);

/// Hex-encoded SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace itl

#endif  // ITL_SHA256_HPP
