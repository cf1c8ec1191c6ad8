#include "cds/session.hpp"

namespace cds::wire {

std::string_view role_name(Role r) {
    switch (r) {
        case Role::customer: return "customer";
        case Role::gateway: return "gateway";
        case Role::ttp: return "ttp";
        case Role::provider: return "provider";
    }
    return "?";
}

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::unauthenticated: return "UNAUTHENTICATED";
        case Phase::authenticated: return "AUTHENTICATED";
        case Phase::in_request: return "IN_REQUEST";
        case Phase::idle: return "IDLE";
    }
    return "?";
}

bool request_legal(Role role, Phase phase, MessageType t) {
    if (!is_request(t)) return false;
    switch (role) {
        case Role::customer:
        case Role::gateway:
            // Both ends of the customer link share one legality table.
            switch (phase) {
                case Phase::unauthenticated:
                    return t == MessageType::auth_req;
                case Phase::authenticated:
                    return t == MessageType::store_req || t == MessageType::retrieve_req ||
                           t == MessageType::check_req;
                default:
                    return false;  // one request in flight at a time
            }
        case Role::ttp:
            return phase == Phase::idle &&
                   (t == MessageType::ma1_store || t == MessageType::ma1_retrieve ||
                    t == MessageType::ma1_check);
        case Role::provider:
            return phase == Phase::idle &&
                   (t == MessageType::ma2_put || t == MessageType::ma2_get ||
                    t == MessageType::ma2_mac_challenge || t == MessageType::ma2_tamper);
    }
    return false;
}

std::optional<ErrorCode> SessionFsm::accept_request(const Envelope& env) {
    if (!session_pinned_) {
        session_id_ = env.session_id;
        session_pinned_ = true;
    } else if (env.session_id != session_id_) {
        return ErrorCode::protocol;
    }
    if (last_recv_seq_ && env.seq <= *last_recv_seq_) return ErrorCode::protocol;
    if (!request_legal(role_, phase_, env.type)) {
        // The bad envelope still advances the replay window.
        last_recv_seq_ = env.seq;
        return ErrorCode::protocol;
    }
    last_recv_seq_ = env.seq;
    phase_ = Phase::in_request;
    return std::nullopt;
}

void SessionFsm::complete_request() {
    if (phase_ != Phase::in_request) return;
    if (role_ == Role::ttp || role_ == Role::provider) {
        phase_ = Phase::idle;
    } else {
        phase_ = authenticated_ ? Phase::authenticated : Phase::unauthenticated;
    }
}

}  // namespace cds::wire
