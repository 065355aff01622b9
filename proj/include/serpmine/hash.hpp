#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace serpmine {

// 32-bit FNV-1a; used for short, content-independent path suffixes.
std::uint32_t fnv1a32(std::string_view data) noexcept;

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string hex8(std::uint32_t value);

} // namespace serpmine
