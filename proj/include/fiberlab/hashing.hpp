#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace fiberlab {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(const std::string& text);
std::string to_hex(const Digest& d);
std::string sha256_hex(const std::string& text);
/// Hex digest of a file's contents; throws if the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace fiberlab
