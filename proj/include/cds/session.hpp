#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cds/envelope.hpp"

namespace cds::wire {

enum class Role { customer, gateway, ttp, provider };

// The customer link walks unauthenticated -> authenticated -> in_request ->
// authenticated; the inter-layer links start idle (the carrying session is
// created per forwarded request, so there is no auth phase to pass).
enum class Phase { unauthenticated, authenticated, in_request, idle };

std::string_view role_name(Role r);
std::string_view phase_name(Phase p);

// May a peer INITIATE this request type while the session sits in this phase?
bool request_legal(Role role, Phase phase, MessageType t);

// Per-session, per-direction bookkeeping: pins the session id on first
// contact, enforces strictly increasing incoming seq, hands out outgoing seq,
// and walks the phase machine. One owner advances a session at a time.
class SessionFsm {
public:
    explicit SessionFsm(Role role)
        : role_(role),
          phase_(role == Role::gateway || role == Role::customer ? Phase::unauthenticated
                                                                 : Phase::idle) {}

    Role role() const { return role_; }
    Phase phase() const { return phase_; }
    const std::string& session_id() const { return session_id_; }

    // Full guard for an incoming request envelope. On success the phase moves
    // to in_request. On failure the phase is unchanged and the error code to
    // answer with is returned (spec: ERROR{PROTOCOL}, phase unchanged).
    std::optional<ErrorCode> accept_request(const Envelope& env);

    // Marks the in-flight request answered; phase returns to the resting
    // state (authenticated / idle / unauthenticated for a failed auth).
    void complete_request();

    // Gateway only: outcome of the AUTH exchange decides the resting phase.
    void set_authenticated(bool ok) { authenticated_ = ok; }
    bool authenticated() const { return authenticated_; }

    std::uint64_t next_send_seq() { return send_seq_++; }

private:
    Role role_;
    Phase phase_;
    bool authenticated_ = false;
    std::string session_id_;
    bool session_pinned_ = false;
    std::optional<std::uint64_t> last_recv_seq_;
    std::uint64_t send_seq_ = 0;
};

}  // namespace cds::wire
