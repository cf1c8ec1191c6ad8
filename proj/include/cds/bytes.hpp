#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cds {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(ByteView b) {
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

std::string base64_encode(ByteView data);
// Strict decoder: rejects bad alphabet, bad padding, trailing garbage.
std::optional<Bytes> base64_decode(std::string_view text);

// Constant-time comparison; false on length mismatch.
bool ct_equal(ByteView a, ByteView b);

void be32_put(std::uint32_t v, std::uint8_t* out);
std::uint32_t be32_get(const std::uint8_t* in);
void be64_put(std::uint64_t v, std::uint8_t* out);

}  // namespace cds
