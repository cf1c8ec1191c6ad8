#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cds {

// Error vocabulary shared between internal failures and wire-level ERROR
// envelopes. The string names are part of the protocol.
enum class ErrorCode {
    protocol,
    parse,
    frame_too_large,
    invalid_argument,
    auth_rejected,
    conflict,
    trust_denied,
    upstream,
    not_found,
    forbidden,
    corrupt_manifest,
    corrupt_store,
    decryption_failure,
    integrity_alarm,
    key_exhausted,
    audit_inconclusive,
    store_failed,
    entropy_failure,
    internal,
};

std::string_view error_code_name(ErrorCode code);
// Unknown names map to ErrorCode::internal.
ErrorCode error_code_from_name(std::string_view name);

class CdsError : public std::runtime_error {
public:
    CdsError(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw CdsError(code, message);
}

}  // namespace cds
