#include "cds/error.hpp"

#include <array>
#include <utility>

namespace cds {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 19> kNames{{
    {ErrorCode::protocol, "PROTOCOL"},
    {ErrorCode::parse, "PARSE"},
    {ErrorCode::frame_too_large, "FRAME_TOO_LARGE"},
    {ErrorCode::invalid_argument, "INVALID_ARGUMENT"},
    {ErrorCode::auth_rejected, "AUTH_REJECTED"},
    {ErrorCode::conflict, "CONFLICT"},
    {ErrorCode::trust_denied, "TRUST_DENIED"},
    {ErrorCode::upstream, "UPSTREAM"},
    {ErrorCode::not_found, "NOT_FOUND"},
    {ErrorCode::forbidden, "FORBIDDEN"},
    {ErrorCode::corrupt_manifest, "CORRUPT_MANIFEST"},
    {ErrorCode::corrupt_store, "CORRUPT_STORE"},
    {ErrorCode::decryption_failure, "DECRYPTION_FAILURE"},
    {ErrorCode::integrity_alarm, "INTEGRITY_ALARM"},
    {ErrorCode::key_exhausted, "KEY_EXHAUSTED"},
    {ErrorCode::audit_inconclusive, "AUDIT_INCONCLUSIVE"},
    {ErrorCode::store_failed, "STORE_FAILED"},
    {ErrorCode::entropy_failure, "ENTROPY_FAILURE"},
    {ErrorCode::internal, "INTERNAL"},
}};

}  // namespace

std::string_view error_code_name(ErrorCode code) {
    for (const auto& [c, name] : kNames)
        if (c == code) return name;
    return "INTERNAL";
}

ErrorCode error_code_from_name(std::string_view name) {
    for (const auto& [c, n] : kNames)
        if (n == name) return c;
    return ErrorCode::internal;
}

}  // namespace cds
