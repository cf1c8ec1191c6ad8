#include "cds/payload.hpp"

#include "cds/error.hpp"

namespace cds::wire {

namespace {

const Json& require_field(const Json& payload, const char* key) {
    auto it = payload.find(key);
    if (it == payload.end())
        fail(ErrorCode::invalid_argument, std::string("payload missing field: ") + key);
    return *it;
}

}  // namespace

std::string require_string(const Json& payload, const char* key, std::size_t max_len) {
    const Json& f = require_field(payload, key);
    if (!f.is_string())
        fail(ErrorCode::invalid_argument, std::string("payload field not a string: ") + key);
    std::string s = f.get<std::string>();
    if (s.size() > max_len)
        fail(ErrorCode::invalid_argument, std::string("payload field too long: ") + key);
    return s;
}

std::uint64_t require_uint(const Json& payload, const char* key) {
    const Json& f = require_field(payload, key);
    if (!f.is_number_unsigned())
        fail(ErrorCode::invalid_argument, std::string("payload field not an unsigned integer: ") + key);
    return f.get<std::uint64_t>();
}

bool require_bool(const Json& payload, const char* key) {
    const Json& f = require_field(payload, key);
    if (!f.is_boolean())
        fail(ErrorCode::invalid_argument, std::string("payload field not a boolean: ") + key);
    return f.get<bool>();
}

Bytes require_base64(const Json& payload, const char* key) {
    // No inner length cap: the frame cap already bounds the body.
    std::string text = require_string(payload, key, kMaxFrameBody);
    auto decoded = base64_decode(text);
    if (!decoded)
        fail(ErrorCode::invalid_argument, std::string("payload field not valid base64: ") + key);
    return std::move(*decoded);
}

const Json& require_array(const Json& payload, const char* key) {
    const Json& f = require_field(payload, key);
    if (!f.is_array())
        fail(ErrorCode::invalid_argument, std::string("payload field not an array: ") + key);
    return f;
}

bool optional_bool(const Json& payload, const char* key, bool fallback) {
    auto it = payload.find(key);
    if (it == payload.end()) return fallback;
    if (!it->is_boolean())
        fail(ErrorCode::invalid_argument, std::string("payload field not a boolean: ") + key);
    return it->get<bool>();
}

}  // namespace cds::wire
