#include "cds/trust.hpp"

#include <cmath>

#include "cds/error.hpp"

namespace cds::trust {

std::string_view action_class_name(ActionClass c) {
    switch (c) {
        case ActionClass::positive: return "positive";
        case ActionClass::wrong: return "wrong";
        case ActionClass::malicious: return "malicious";
    }
    return "?";
}

std::string_view category_name(Category c) {
    switch (c) {
        case Category::trusted: return "Trusted";
        case Category::innocent: return "Innocent";
        case Category::untrusted: return "Untrusted";
    }
    return "?";
}

void TrustConfig::validate() const {
    if (security_level < 1) fail(ErrorCode::invalid_argument, "security_level m must be >= 1");
    if (!(connection_threshold > 0.0 && connection_threshold <= 1.0))
        fail(ErrorCode::invalid_argument, "connection_threshold outside (0,1]");
    if (!(innocent_threshold > 0.0 && innocent_threshold < trusted_threshold &&
          trusted_threshold < 1.0))
        fail(ErrorCode::invalid_argument, "category thresholds must satisfy 0 < innocent < trusted < 1");
    if (!(smoothing >= 0.0 && smoothing < 1.0))
        fail(ErrorCode::invalid_argument, "smoothing outside [0,1)");
    if (!(initial_trust >= 0.0 && initial_trust <= 1.0))
        fail(ErrorCode::invalid_argument, "initial_trust outside [0,1]");
}

TrustState initial_state(std::string customer_id, const TrustConfig& cfg) {
    TrustState s;
    s.customer_id = std::move(customer_id);
    s.trust_degree = cfg.initial_trust;
    s.category = classify(s.trust_degree, cfg);
    return s;
}

double action_weight(ActionClass c) {
    switch (c) {
        case ActionClass::positive: return 1.0;
        case ActionClass::wrong: return 0.5;
        case ActionClass::malicious: return 0.0;
    }
    return 0.0;
}

double action_value(std::uint64_t na, std::uint64_t totala, ActionClass c, unsigned m) {
    if (totala == 0) fail(ErrorCode::invalid_argument, "action_value: totala must be >= 1");
    if (na > totala) fail(ErrorCode::invalid_argument, "action_value: na exceeds totala");
    if (m < 1) fail(ErrorCode::invalid_argument, "action_value: m must be >= 1");
    double past = static_cast<double>(totala - na) / static_cast<double>(totala);
    return past * std::pow(action_weight(c), static_cast<double>(m));
}

TrustState record_action(const TrustState& state, ActionClass c, const TrustConfig& cfg) {
    TrustState next = state;
    next.total_actions = state.total_actions + 1;
    if (c != ActionClass::positive) next.negative_actions = state.negative_actions + 1;
    next.last_pa = action_value(next.negative_actions, next.total_actions, c, cfg.security_level);
    next.trust_degree = cfg.smoothing * state.trust_degree + (1.0 - cfg.smoothing) * next.last_pa;
    next.category = classify(next.trust_degree, cfg);
    return next;
}

Category classify(double t, const TrustConfig& cfg) {
    if (t >= cfg.trusted_threshold) return Category::trusted;
    if (t >= cfg.innocent_threshold) return Category::innocent;
    return Category::untrusted;
}

bool authorize_connection(const TrustState& state, const TrustConfig& cfg) {
    return state.trust_degree >= cfg.connection_threshold;
}

}  // namespace cds::trust
