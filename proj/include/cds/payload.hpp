#pragma once

#include <cstdint>
#include <string>

#include "cds/bytes.hpp"
#include "cds/envelope.hpp"

namespace cds::wire {

// Typed payload accessors; a missing or mistyped field throws
// CdsError(invalid_argument) naming the key.
std::string require_string(const Json& payload, const char* key, std::size_t max_len = 4096);
std::uint64_t require_uint(const Json& payload, const char* key);
bool require_bool(const Json& payload, const char* key);
Bytes require_base64(const Json& payload, const char* key);
const Json& require_array(const Json& payload, const char* key);
bool optional_bool(const Json& payload, const char* key, bool fallback);

}  // namespace cds::wire
