#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cds/random.hpp"
#include "cds/transport.hpp"
#include "cds/trust.hpp"

namespace cds {

struct GatewayConfig {
    std::filesystem::path state_dir;
    trust::TrustConfig trust;
    unsigned pbkdf2_iterations = 10000;  // >= 10000
    // Overrides for the error-code -> action-class table, keyed by wire error
    // name; value one of positive/wrong/malicious/none.
    std::map<std::string, std::string> action_class_overrides;

    void validate() const;
};

// Salted, iterated password records. Plaintext never touches disk; lookups
// take the same hashing path whether or not the user exists.
class CredentialStore {
public:
    CredentialStore(std::filesystem::path file, unsigned iterations);

    // Returns the new customer_id; duplicate usernames are a conflict.
    std::string add(const std::string& username, const std::string& password, RandomSource& rng);
    // customer_id on success; nullopt for unknown user or wrong password.
    std::optional<std::string> verify(const std::string& username,
                                      const std::string& password) const;
    std::optional<std::string> customer_id_of(const std::string& username) const;

private:
    struct Record {
        Bytes salt;
        Bytes hash;
        std::string customer_id;
    };

    void load();
    void persist_locked();

    std::filesystem::path file_;
    unsigned iterations_;
    Record decoy_;  // hashed against for unknown users
    mutable std::shared_mutex mu_;
    std::map<std::string, Record> records_;
};

// Per-customer trust states, persisted one record per line.
class TrustStore {
public:
    TrustStore(std::filesystem::path file, trust::TrustConfig cfg);

    trust::TrustState get_or_create(const std::string& customer_id);
    // Applies one action under the per-customer serialization lock and
    // persists the new state before returning it.
    trust::TrustState apply_action(const std::string& customer_id, trust::ActionClass action);

private:
    void load();
    void persist_locked();

    std::filesystem::path file_;
    trust::TrustConfig cfg_;
    std::mutex mu_;
    std::map<std::string, trust::TrustState> states_;
};

// Customer-layer service: Interface Agent (validation), Proxy Agent (identity
// + forwarding) and Customer Trust Agent (gating) rolled into one process.
class GatewayService : public net::SessionFactory {
public:
    GatewayService(GatewayConfig cfg, RandomSource& rng, net::Requester& ttp);

    std::string register_customer(const std::string& username, const std::string& password);
    std::optional<std::string> authenticate(const std::string& username,
                                            const std::string& password);

    // nullopt = do not record (system-side fault, not customer behaviour).
    std::optional<trust::ActionClass> classify_error(ErrorCode code) const;

    trust::TrustState record_customer_action(const std::string& customer_id,
                                             trust::ActionClass action, std::string note);

    trust::TrustState trust_state(const std::string& customer_id);
    std::optional<std::string> customer_id_of(const std::string& username);
    bool authorized(const std::string& customer_id);

    std::vector<trust::ActionRecord> audit_log() const;

    const GatewayConfig& config() const { return cfg_; }
    net::Requester& ttp() { return ttp_; }
    RandomSource& rng() { return rng_; }

    std::unique_ptr<net::ServerSession> open_session() override;

private:
    GatewayConfig cfg_;
    RandomSource& rng_;
    net::Requester& ttp_;
    CredentialStore credentials_;
    TrustStore trust_;
    mutable std::mutex audit_mu_;
    std::uint64_t audit_tick_ = 0;
    std::vector<trust::ActionRecord> audit_;
};

}  // namespace cds
