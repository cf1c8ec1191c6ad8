#pragma once

#include <cstdint>
#include <string>

namespace cds::trust {

enum class ActionClass { positive, wrong, malicious };

enum class Category { trusted, innocent, untrusted };

std::string_view action_class_name(ActionClass c);
std::string_view category_name(Category c);

// Audit-trail entry for one evaluated customer action.
struct ActionRecord {
    std::string customer_id;
    ActionClass action = ActionClass::positive;
    std::uint64_t timestamp = 0;  // monotonic tick, non-decreasing per customer
    std::string note;
};

struct TrustConfig {
    unsigned security_level = 1;       // m >= 1; exponent on the action weight
    double connection_threshold = 0.4; // minimum degree to reach the TTP
    double trusted_threshold = 0.7;
    double innocent_threshold = 0.4;
    double smoothing = 0.5;            // EMA factor on the previous degree
    double initial_trust = 0.5;        // new customers start Innocent

    // Throws invalid_argument when any range or ordering constraint fails.
    void validate() const;
};

struct TrustState {
    std::string customer_id;
    std::uint64_t total_actions = 0;     // Totala
    std::uint64_t negative_actions = 0;  // Na
    double trust_degree = 0.5;           // T in [0,1]
    double last_pa = 0.0;
    Category category = Category::innocent;
};

TrustState initial_state(std::string customer_id, const TrustConfig& cfg);

// Wa: positive 1, wrong 0.5, malicious 0.
double action_weight(ActionClass c);

// Pa = (1 - na/totala) * Wa^m, in [0,1]. Counts include the action being
// valued; totala = 0 is an error.
double action_value(std::uint64_t na, std::uint64_t totala, ActionClass c, unsigned m);

// Advances the counters, recomputes Pa on the new counters and folds it into
// the degree: T' = smoothing*T + (1-smoothing)*Pa. Pure; input unchanged.
TrustState record_action(const TrustState& state, ActionClass c, const TrustConfig& cfg);

// t >= trusted -> Trusted; innocent <= t < trusted -> Innocent; else Untrusted.
Category classify(double t, const TrustConfig& cfg);

// Step-04 gate: may this customer open a connection to the TTP layer?
bool authorize_connection(const TrustState& state, const TrustConfig& cfg);

}  // namespace cds::trust
