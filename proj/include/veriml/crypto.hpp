#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace veriml {

using Digest = std::array<std::uint8_t, 32>;
using Bytes = std::vector<std::uint8_t>;

Digest sha256(std::span<const std::uint8_t> data);

Bytes hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

/// Constant-time comparison; unequal lengths compare false.
bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws FormatError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

}  // namespace veriml
