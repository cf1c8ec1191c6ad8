#include "cds/gateway.hpp"

#include <charconv>
#include <cstdio>

#include "cds/crypto.hpp"
#include "cds/error.hpp"
#include "cds/fsutil.hpp"
#include "cds/payload.hpp"
#include "cds/session.hpp"

namespace cds {

namespace fs = std::filesystem;
using wire::Envelope;
using wire::Json;
using wire::MessageType;

namespace {

constexpr std::size_t kSaltLen = 16;
constexpr std::size_t kHashLen = 32;
constexpr std::size_t kMaxUsernameLen = 256;
constexpr std::size_t kMaxPasswordLen = 1024;

std::string double_to_text(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) fail(ErrorCode::internal, "double_to_text");
    return std::string(buf, p);
}

double text_to_double(std::string_view s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail(ErrorCode::corrupt_store, "bad number in state store");
    return v;
}

std::uint64_t text_to_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail(ErrorCode::corrupt_store, "bad count in state store");
    return v;
}

// State-store line format: base64 fields joined by tabs.
std::vector<std::string> split_b64_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t tab = line.find('\t', pos);
        std::string_view field =
            line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos);
        auto decoded = base64_decode(field);
        if (!decoded) fail(ErrorCode::corrupt_store, "bad base64 field in state store");
        fields.emplace_back(decoded->begin(), decoded->end());
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return fields;
}

std::string join_b64_line(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) line += '\t';
        line += base64_encode(to_bytes(fields[i]));
    }
    return line;
}

void for_each_line(const std::string& text, const std::function<void(std::string_view)>& f) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        if (!line.empty()) f(line);
        pos = eol + 1;
    }
}

}  // namespace

void GatewayConfig::validate() const {
    trust.validate();
    if (pbkdf2_iterations < 10000)
        fail(ErrorCode::invalid_argument, "pbkdf2_iterations must be >= 10000");
    for (const auto& [code, cls] : action_class_overrides) {
        if (cls != "positive" && cls != "wrong" && cls != "malicious" && cls != "none")
            fail(ErrorCode::invalid_argument, "bad action class override for " + code);
    }
}

// ---------------------------------------------------------------------------
// CredentialStore
// ---------------------------------------------------------------------------

CredentialStore::CredentialStore(std::filesystem::path file, unsigned iterations)
    : file_(std::move(file)), iterations_(iterations) {
    decoy_.salt.assign(kSaltLen, 0x5a);
    decoy_.hash = crypto::pbkdf2_hmac_sha256("decoy", decoy_.salt, iterations_, kHashLen);
    load();
}

void CredentialStore::load() {
    auto text = fsutil::read_text_file(file_);
    if (!text) return;  // first run
    for_each_line(*text, [this](std::string_view line) {
        auto fields = split_b64_line(line);
        if (fields.size() != 4) fail(ErrorCode::corrupt_store, "bad credential record");
        Record r;
        r.salt = to_bytes(fields[1]);
        r.hash = to_bytes(fields[2]);
        r.customer_id = fields[3];
        if (r.salt.size() != kSaltLen || r.hash.size() != kHashLen)
            fail(ErrorCode::corrupt_store, "bad credential record");
        records_[fields[0]] = std::move(r);
    });
}

void CredentialStore::persist_locked() {
    std::string text;
    for (const auto& [username, r] : records_) {
        text += join_b64_line({username, to_string(r.salt), to_string(r.hash), r.customer_id});
        text += '\n';
    }
    fsutil::atomic_write(file_, text);
}

std::string CredentialStore::add(const std::string& username, const std::string& password,
                                 RandomSource& rng) {
    if (username.empty() || username.size() > kMaxUsernameLen)
        fail(ErrorCode::invalid_argument, "bad username");
    if (password.empty() || password.size() > kMaxPasswordLen)
        fail(ErrorCode::invalid_argument, "bad password");

    Record r;
    r.salt = rng.bytes(kSaltLen);
    r.hash = crypto::pbkdf2_hmac_sha256(password, r.salt, iterations_, kHashLen);
    r.customer_id = to_hex(rng.bytes(8));

    std::unique_lock lock(mu_);
    if (records_.count(username)) fail(ErrorCode::conflict, "username already registered");
    records_[username] = r;
    persist_locked();
    return r.customer_id;
}

std::optional<std::string> CredentialStore::verify(const std::string& username,
                                                   const std::string& password) const {
    Record candidate;
    bool known = false;
    {
        std::shared_lock lock(mu_);
        auto it = records_.find(username);
        if (it != records_.end()) {
            candidate = it->second;
            known = true;
        } else {
            candidate = decoy_;  // same hashing cost for unknown users
        }
    }
    Bytes hash = crypto::pbkdf2_hmac_sha256(password, candidate.salt, iterations_, kHashLen);
    bool match = ct_equal(hash, candidate.hash);
    if (known && match) return candidate.customer_id;
    return std::nullopt;
}

std::optional<std::string> CredentialStore::customer_id_of(const std::string& username) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(username);
    if (it == records_.end()) return std::nullopt;
    return it->second.customer_id;
}

// ---------------------------------------------------------------------------
// TrustStore
// ---------------------------------------------------------------------------

TrustStore::TrustStore(std::filesystem::path file, trust::TrustConfig cfg)
    : file_(std::move(file)), cfg_(cfg) {
    load();
}

void TrustStore::load() {
    auto text = fsutil::read_text_file(file_);
    if (!text) return;
    for_each_line(*text, [this](std::string_view line) {
        auto fields = split_b64_line(line);
        if (fields.size() != 6) fail(ErrorCode::corrupt_store, "bad trust record");
        trust::TrustState s;
        s.customer_id = fields[0];
        s.total_actions = text_to_u64(fields[1]);
        s.negative_actions = text_to_u64(fields[2]);
        s.trust_degree = text_to_double(fields[3]);
        s.last_pa = text_to_double(fields[4]);
        s.category = trust::classify(s.trust_degree, cfg_);
        if (trust::category_name(s.category) != fields[5])
            fail(ErrorCode::corrupt_store, "trust record category mismatch");
        states_[s.customer_id] = std::move(s);
    });
}

void TrustStore::persist_locked() {
    std::string text;
    for (const auto& [id, s] : states_) {
        text += join_b64_line({id, std::to_string(s.total_actions),
                               std::to_string(s.negative_actions), double_to_text(s.trust_degree),
                               double_to_text(s.last_pa),
                               std::string(trust::category_name(s.category))});
        text += '\n';
    }
    fsutil::atomic_write(file_, text);
}

trust::TrustState TrustStore::get_or_create(const std::string& customer_id) {
    std::lock_guard lock(mu_);
    auto it = states_.find(customer_id);
    if (it != states_.end()) return it->second;
    trust::TrustState fresh = trust::initial_state(customer_id, cfg_);
    states_[customer_id] = fresh;
    persist_locked();
    return fresh;
}

trust::TrustState TrustStore::apply_action(const std::string& customer_id,
                                           trust::ActionClass action) {
    std::lock_guard lock(mu_);
    auto it = states_.find(customer_id);
    trust::TrustState current =
        it != states_.end() ? it->second : trust::initial_state(customer_id, cfg_);
    trust::TrustState next = trust::record_action(current, action, cfg_);
    states_[customer_id] = next;
    persist_locked();
    return next;
}

// ---------------------------------------------------------------------------
// GatewayService
// ---------------------------------------------------------------------------

GatewayService::GatewayService(GatewayConfig cfg, RandomSource& rng, net::Requester& ttp)
    : cfg_(std::move(cfg)),
      rng_(rng),
      ttp_(ttp),
      credentials_((fs::create_directories(cfg_.state_dir), cfg_.state_dir / "credentials"),
                   cfg_.pbkdf2_iterations),
      trust_(cfg_.state_dir / "trust", cfg_.trust) {
    cfg_.validate();
}

std::string GatewayService::register_customer(const std::string& username,
                                              const std::string& password) {
    std::string customer_id = credentials_.add(username, password, rng_);
    trust_.get_or_create(customer_id);  // fresh customers start at T0
    return customer_id;
}

std::optional<std::string> GatewayService::authenticate(const std::string& username,
                                                        const std::string& password) {
    return credentials_.verify(username, password);
}

std::optional<trust::ActionClass> GatewayService::classify_error(ErrorCode code) const {
    auto it = cfg_.action_class_overrides.find(std::string(error_code_name(code)));
    if (it != cfg_.action_class_overrides.end()) {
        if (it->second == "positive") return trust::ActionClass::positive;
        if (it->second == "wrong") return trust::ActionClass::wrong;
        if (it->second == "malicious") return trust::ActionClass::malicious;
        return std::nullopt;  // "none"
    }
    switch (code) {
        // Well-formed but invalid requests: harmless customer mistakes.
        case ErrorCode::not_found:
        case ErrorCode::forbidden:
        case ErrorCode::invalid_argument:
        case ErrorCode::conflict:
        case ErrorCode::key_exhausted:
            return trust::ActionClass::wrong;
        // Protocol abuse.
        case ErrorCode::protocol:
        case ErrorCode::parse:
        case ErrorCode::frame_too_large:
            return trust::ActionClass::malicious;
        // System-side faults are not customer behaviour.
        default:
            return std::nullopt;
    }
}

trust::TrustState GatewayService::record_customer_action(const std::string& customer_id,
                                                         trust::ActionClass action,
                                                         std::string note) {
    trust::TrustState state = trust_.apply_action(customer_id, action);
    {
        std::lock_guard lock(audit_mu_);
        audit_.push_back(trust::ActionRecord{customer_id, action, audit_tick_++, std::move(note)});
    }
    return state;
}

trust::TrustState GatewayService::trust_state(const std::string& customer_id) {
    return trust_.get_or_create(customer_id);
}

std::optional<std::string> GatewayService::customer_id_of(const std::string& username) {
    return credentials_.customer_id_of(username);
}

bool GatewayService::authorized(const std::string& customer_id) {
    return trust::authorize_connection(trust_.get_or_create(customer_id), cfg_.trust);
}

std::vector<trust::ActionRecord> GatewayService::audit_log() const {
    std::lock_guard lock(audit_mu_);
    return audit_;
}

// ---------------------------------------------------------------------------
// Wire adapter: the Steps 01-04 / 13-14 session
// ---------------------------------------------------------------------------

namespace {

class GatewaySession final : public net::ServerSession {
public:
    explicit GatewaySession(GatewayService& service)
        : service_(service), fsm_(wire::Role::gateway) {}

    std::vector<Envelope> on_envelope(const Envelope& env) override {
        if (auto err = fsm_.accept_request(env)) {
            record_if_attributed(trust::ActionClass::malicious,
                                 "protocol violation: " +
                                     std::string(wire::message_type_name(env.type)) + " in " +
                                     std::string(wire::phase_name(fsm_.phase())));
            return {wire::make_error(env.session_id, fsm_.next_send_seq(), *err,
                                     "message not allowed in this session phase")};
        }
        Envelope resp;
        try {
            resp = dispatch(env);
        } catch (const CdsError& e) {
            if (auto cls = service_.classify_error(e.code()))
                record_if_attributed(*cls, std::string("request failed: ") +
                                               std::string(error_code_name(e.code())));
            resp = wire::make_error(fsm_.session_id(), fsm_.next_send_seq(), e.code(), e.what());
        }
        fsm_.complete_request();
        return {resp};
    }

    std::vector<Envelope> on_decode_error(wire::DecodeStatus status) override {
        record_if_attributed(trust::ActionClass::malicious,
                             std::string("undecodable frame: ") +
                                 std::string(wire::decode_status_name(status)));
        ErrorCode code = status == wire::DecodeStatus::frame_too_large
                             ? ErrorCode::frame_too_large
                             : (status == wire::DecodeStatus::protocol_error ? ErrorCode::protocol
                                                                             : ErrorCode::parse);
        return {wire::make_error(fsm_.session_id(), fsm_.next_send_seq(), code,
                                 "undecodable frame")};
    }

private:
    void record_if_attributed(trust::ActionClass cls, std::string note) {
        if (!customer_id_.empty())
            service_.record_customer_action(customer_id_, cls, std::move(note));
    }

    Envelope respond(const Envelope& req, Json payload) {
        return wire::make_envelope(wire::response_for(req.type), fsm_.session_id(),
                                   fsm_.next_send_seq(), std::move(payload));
    }

    Envelope dispatch(const Envelope& env) {
        switch (env.type) {
            case MessageType::auth_req:
                return handle_auth(env);
            case MessageType::store_req:
            case MessageType::retrieve_req:
            case MessageType::check_req:
                return gate_and_forward(env);
            default:
                fail(ErrorCode::protocol, "unhandled gateway message");
        }
    }

    Envelope handle_auth(const Envelope& env) {
        std::string username = wire::require_string(env.payload, "username");
        std::string password = wire::require_string(env.payload, "password");
        bool registering = wire::optional_bool(env.payload, "register", false);

        if (registering) {
            // Throws conflict for duplicate names; the customer is then
            // authenticated as the account it just created.
            service_.register_customer(username, password);
        }

        std::optional<std::string> customer_id = service_.authenticate(username, password);
        if (!customer_id) {
            // Identical bytes for unknown user and wrong password.
            fsm_.set_authenticated(false);
            return respond(env, Json{{"ok", false}, {"reason", "rejected"}});
        }
        customer_id_ = *customer_id;
        fsm_.set_authenticated(true);
        return respond(env, Json{{"ok", true}, {"reason", ""}});
    }

    // Steps 03-04 and 13-14: trust gate, MA1 relay, action bookkeeping.
    Envelope gate_and_forward(const Envelope& env) {
        if (!service_.authorized(customer_id_)) {
            // The request is removed: nothing reaches the TTP and blocked
            // traffic is not scored as behaviour.
            return wire::make_error(fsm_.session_id(), fsm_.next_send_seq(),
                                    ErrorCode::trust_denied,
                                    "trust degree below the connection threshold");
        }

        MessageType ma1_type;
        Json ma1_payload = Json::object();
        switch (env.type) {
            case MessageType::store_req:
                ma1_type = MessageType::ma1_store;
                ma1_payload["file_name"] = wire::require_string(env.payload, "file_name");
                ma1_payload["data"] = wire::require_string(env.payload, "data", wire::kMaxFrameBody);
                break;
            case MessageType::retrieve_req:
                ma1_type = MessageType::ma1_retrieve;
                ma1_payload["file_id"] = wire::require_string(env.payload, "file_id");
                break;
            default:
                ma1_type = MessageType::ma1_check;
                ma1_payload["file_id"] = wire::require_string(env.payload, "file_id");
                break;
        }
        ma1_payload["customer_id"] = customer_id_;

        Envelope upstream = service_.ttp().call(ma1_type, std::move(ma1_payload));

        if (upstream.type == MessageType::error) {
            ErrorCode code = error_code_from_name(upstream.payload.value("code", "INTERNAL"));
            if (auto cls = service_.classify_error(code))
                service_.record_customer_action(
                    customer_id_, *cls,
                    std::string(wire::message_type_name(env.type)) + " failed: " +
                        std::string(error_code_name(code)));
            return wire::make_envelope(MessageType::error, fsm_.session_id(),
                                       fsm_.next_send_seq(), upstream.payload);
        }

        service_.record_customer_action(customer_id_, trust::ActionClass::positive,
                                        std::string(wire::message_type_name(env.type)) + " ok");
        return respond(env, upstream.payload);
    }

    GatewayService& service_;
    wire::SessionFsm fsm_;
    std::string customer_id_;
};

}  // namespace

std::unique_ptr<net::ServerSession> GatewayService::open_session() {
    return std::make_unique<GatewaySession>(*this);
}

}  // namespace cds
