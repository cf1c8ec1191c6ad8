#include "cds/ttp.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <system_error>

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

constexpr std::size_t kMaxNameLen = 512;
constexpr std::size_t kMaxCustomerIdLen = 256;

void wipe(Bytes& b) {
    if (!b.empty()) OPENSSL_cleanse(b.data(), b.size());
    b.clear();
}

}  // namespace

void TtpConfig::validate() const {
    if (rsa_bits < crypto::kMinServiceRsaBits)
        fail(ErrorCode::invalid_argument, "rsa_bits below service minimum");
    std::size_t capacity = static_cast<std::size_t>(rsa_bits) / 8 - crypto::kOaepOverhead;
    if (fragment_size < 1 || fragment_size > capacity)
        fail(ErrorCode::invalid_argument,
             "fragment_size must be in [1, " + std::to_string(capacity) + "]");
    if (mac_keys < 1) fail(ErrorCode::invalid_argument, "mac_keys must be >= 1");
}

TtpService::TtpService(TtpConfig cfg, RandomSource& rng, net::Requester& provider)
    : cfg_(std::move(cfg)), rng_(rng), provider_(provider) {
    cfg_.validate();
    fs::create_directories(cfg_.store_root);
}

std::filesystem::path TtpService::file_dir(const std::string& file_id) const {
    return cfg_.store_root / file_id;
}

std::unique_lock<std::mutex> TtpService::lock_file(const std::string& file_id) {
    std::lock_guard<std::mutex> guard(locks_mu_);
    auto& slot = locks_[file_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return std::unique_lock<std::mutex>(*slot);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

FileManifest TtpService::load_manifest(const std::string& file_id) {
    if (!fsutil::is_hex_id(file_id, 32)) fail(ErrorCode::not_found, "unknown file_id");
    auto text = fsutil::read_text_file(file_dir(file_id) / "manifest");
    if (!text) fail(ErrorCode::not_found, "unknown file_id");

    Json j = Json::parse(*text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::corrupt_manifest, "manifest is not valid JSON");

    FileManifest m;
    try {
        m.file_id = j.at("file_id").get<std::string>();
        m.customer_id = j.at("customer_id").get<std::string>();
        m.file_name = j.at("file_name").get<std::string>();
        m.original_length = j.at("original_length").get<std::uint64_t>();
        m.fragment_size = j.at("fragment_size").get<std::size_t>();
        m.fragment_count = j.at("fragment_count").get<std::size_t>();
        const Json& kp = j.at("keypair");
        m.keypair = crypto::AsymKeyPair::from_components(
            kp.at("n").get<std::string>(), kp.at("e").get<std::string>(),
            kp.at("d").get<std::string>(), kp.at("p").get<std::string>(),
            kp.at("q").get<std::string>());
        for (const Json& row : j.at("macs")) {
            std::vector<Bytes> tags;
            for (const Json& tag : row) {
                auto bytes = base64_decode(tag.get<std::string>());
                if (!bytes || bytes->size() != 32)
                    fail(ErrorCode::corrupt_manifest, "bad MAC entry");
                tags.push_back(std::move(*bytes));
            }
            m.stored_macs.push_back(std::move(tags));
        }
    } catch (const Json::exception&) {
        fail(ErrorCode::corrupt_manifest, "manifest field missing or mistyped");
    }

    if (m.file_id != file_id || m.stored_macs.empty() || m.fragment_count == 0)
        fail(ErrorCode::corrupt_manifest, "manifest inconsistent");
    for (const auto& row : m.stored_macs)
        if (row.size() != m.fragment_count)
            fail(ErrorCode::corrupt_manifest, "MAC matrix shape mismatch");
    return m;
}

crypto::MacKeySet TtpService::load_keyset(const std::string& file_id) {
    auto text = fsutil::read_text_file(file_dir(file_id) / "keys");
    if (!text) fail(ErrorCode::corrupt_manifest, "keys file missing");

    crypto::MacKeySet set;
    set.file_id = file_id;
    std::size_t pos = 0;
    while (pos < text->size()) {
        std::size_t eol = text->find('\n', pos);
        if (eol == std::string::npos) eol = text->size();
        std::string_view line(text->data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos || tab + 2 != line.size())
            fail(ErrorCode::corrupt_manifest, "bad keys line");
        auto key = base64_decode(line.substr(0, tab));
        char flag = line[tab + 1];
        if (!key || key->size() != 32 || (flag != '0' && flag != '1'))
            fail(ErrorCode::corrupt_manifest, "bad keys line");
        set.keys.push_back(std::move(*key));
        set.used.push_back(flag == '1');
    }
    if (set.keys.empty()) fail(ErrorCode::corrupt_manifest, "empty keys file");
    return set;
}

void TtpService::persist_keyset(const fs::path& dir, const crypto::MacKeySet& keys) {
    std::string text;
    for (std::size_t j = 0; j < keys.keys.size(); ++j) {
        text += base64_encode(keys.keys[j]);
        text += '\t';
        text += keys.used[j] ? '1' : '0';
        text += '\n';
    }
    fsutil::atomic_write(dir / "keys", text);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::string TtpService::handle_store(const std::string& customer_id,
                                     const std::string& file_name, ByteView data) {
    if (customer_id.empty() || customer_id.size() > kMaxCustomerIdLen)
        fail(ErrorCode::invalid_argument, "bad customer_id");
    if (file_name.empty() || file_name.size() > kMaxNameLen)
        fail(ErrorCode::invalid_argument, "bad file_name");
    if (data.size() > cfg_.max_file_bytes)
        fail(ErrorCode::invalid_argument, "file exceeds the size limit");

    std::string file_id = to_hex(rng_.bytes(16));

    std::vector<crypto::Fragment> fragments = crypto::fragment(data, cfg_.fragment_size);
    crypto::AsymKeyPair keypair = crypto::AsymKeyPair::generate(cfg_.rsa_bits, rng_);
    crypto::AsymPublicKey pub = keypair.public_part();

    std::vector<crypto::EncryptedFragment> encrypted;
    encrypted.reserve(fragments.size());
    for (const auto& f : fragments) encrypted.push_back(crypto::encrypt_fragment(f, pub, rng_));

    crypto::MacKeySet keyset = crypto::generate_mac_keyset(file_id, cfg_.mac_keys, rng_);
    std::vector<std::vector<Bytes>> macs(cfg_.mac_keys);
    for (std::size_t j = 0; j < cfg_.mac_keys; ++j) {
        macs[j].reserve(encrypted.size());
        for (const auto& ef : encrypted)
            macs[j].push_back(crypto::compute_mac(keyset.keys[j], file_id, ef.index, ef.ciphertext));
    }

    // Outsource before persisting anything: a provider failure must leave no
    // trace of this file at the TTP.
    Json frag_payload = Json::array();
    for (const auto& ef : encrypted)
        frag_payload.push_back(Json{{"index", ef.index}, {"ciphertext", base64_encode(ef.ciphertext)}});
    try {
        Envelope resp = provider_.call(MessageType::ma2_put,
                                       Json{{"file_id", file_id}, {"fragments", std::move(frag_payload)}});
        net::throw_if_error(resp);
    } catch (const CdsError& e) {
        fail(ErrorCode::store_failed, std::string("provider did not accept the fragments: ") + e.what());
    }

    auto lock = lock_file(file_id);
    fs::path staging = cfg_.store_root / (file_id + ".staging");
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);
    try {
        Json kp{{"n", keypair.n_hex()}, {"e", keypair.e_hex()}, {"d", keypair.d_hex()},
                {"p", keypair.p_hex()}, {"q", keypair.q_hex()}};
        Json mac_rows = Json::array();
        for (const auto& row : macs) {
            Json r = Json::array();
            for (const auto& tag : row) r.push_back(base64_encode(tag));
            mac_rows.push_back(std::move(r));
        }
        Json manifest{
            {"file_id", file_id},
            {"customer_id", customer_id},
            {"file_name", file_name},
            {"original_length", data.size()},
            {"fragment_size", cfg_.fragment_size},
            {"fragment_count", encrypted.size()},
            {"keypair", std::move(kp)},
            {"macs", std::move(mac_rows)},
        };
        fsutil::atomic_write(staging / "manifest", manifest.dump(2));
        persist_keyset(staging, keyset);
        fs::rename(staging, file_dir(file_id));
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }

    // Fragment buffers are deleted here; only MACs, keys and the keypair stay.
    for (auto& f : fragments) wipe(f.payload);
    return file_id;
}

TtpService::RetrieveResult TtpService::handle_retrieve(const std::string& customer_id,
                                                       const std::string& file_id) {
    auto lock = lock_file(file_id);
    FileManifest manifest = load_manifest(file_id);
    if (manifest.customer_id != customer_id)
        fail(ErrorCode::forbidden, "file belongs to another customer");

    Envelope resp;
    try {
        resp = provider_.call(MessageType::ma2_get, Json{{"file_id", file_id}});
    } catch (const CdsError& e) {
        if (e.code() == ErrorCode::upstream) throw;
        fail(ErrorCode::integrity_alarm, std::string("provider cannot produce the file: ") + e.what());
    }
    if (resp.type == MessageType::error)
        fail(ErrorCode::integrity_alarm, "provider cannot produce the file: " +
                                             resp.payload.value("code", std::string("?")));

    std::vector<crypto::Fragment> fragments;
    try {
        const Json& arr = wire::require_array(resp.payload, "fragments");
        if (arr.size() != manifest.fragment_count)
            fail(ErrorCode::integrity_alarm, "provider returned a different fragment count");
        for (const Json& item : arr) {
            if (!item.is_object()) fail(ErrorCode::integrity_alarm, "bad fragment entry");
            crypto::EncryptedFragment ef{wire::require_uint(item, "index"),
                                         wire::require_base64(item, "ciphertext")};
            fragments.push_back(crypto::decrypt_fragment(ef, manifest.keypair));
        }
    } catch (const CdsError& e) {
        if (e.code() == ErrorCode::integrity_alarm) throw;
        // Undecodable payloads and undecryptable fragments both mean the
        // stored data is no longer what this service outsourced.
        fail(ErrorCode::integrity_alarm, std::string("retrieved data failed decryption: ") + e.what());
    }

    Bytes data;
    try {
        data = crypto::reassemble(fragments);
    } catch (const CdsError&) {
        fail(ErrorCode::integrity_alarm, "retrieved fragments do not assemble");
    }
    if (data.size() != manifest.original_length)
        fail(ErrorCode::integrity_alarm, "retrieved length mismatch");
    return RetrieveResult{manifest.file_name, std::move(data)};
}

TtpService::CheckResult TtpService::handle_check(const std::string& customer_id,
                                                 const std::string& file_id) {
    auto lock = lock_file(file_id);
    FileManifest manifest = load_manifest(file_id);
    if (manifest.customer_id != customer_id)
        fail(ErrorCode::forbidden, "file belongs to another customer");

    crypto::MacKeySet keyset = load_keyset(file_id);
    int j = keyset.first_unused();
    if (j < 0)
        fail(ErrorCode::key_exhausted,
             "all MAC challenge keys for this file are used; re-store the file to provision fresh keys");

    // Burn before transmission: once the key leaves this process it is
    // compromised no matter how the audit ends.
    keyset.used[static_cast<std::size_t>(j)] = true;
    persist_keyset(file_dir(file_id), keyset);

    Envelope resp;
    try {
        resp = provider_.call(MessageType::ma2_mac_challenge,
                              Json{{"file_id", file_id},
                                   {"key", base64_encode(keyset.keys[static_cast<std::size_t>(j)])},
                                   {"key_index", static_cast<std::uint64_t>(j)}});
        net::throw_if_error(resp);
    } catch (const CdsError& e) {
        fail(ErrorCode::audit_inconclusive,
             std::string("challenge not answered (key ") + std::to_string(j) + " burned): " + e.what());
    }

    std::vector<bool> seen(manifest.fragment_count, false);
    std::vector<bool> good(manifest.fragment_count, false);
    try {
        const Json& tags = wire::require_array(resp.payload, "tags");
        for (const Json& item : tags) {
            if (!item.is_object()) fail(ErrorCode::invalid_argument, "bad tag entry");
            std::uint64_t index = wire::require_uint(item, "index");
            Bytes tag = wire::require_base64(item, "tag");
            if (index >= manifest.fragment_count || seen[index])
                fail(ErrorCode::invalid_argument, "tag indices malformed");
            seen[index] = true;
            good[index] = ct_equal(tag, manifest.stored_macs[static_cast<std::size_t>(j)][index]);
        }
    } catch (const CdsError&) {
        fail(ErrorCode::audit_inconclusive,
             std::string("challenge response malformed (key ") + std::to_string(j) + " burned)");
    }

    CheckResult result;
    result.key_index = static_cast<std::size_t>(j);
    for (std::size_t i = 0; i < manifest.fragment_count; ++i)
        if (!seen[i] || !good[i]) result.corrupted_indices.push_back(i);
    result.ok = result.corrupted_indices.empty();
    return result;
}

// ---------------------------------------------------------------------------
// Wire adapter
// ---------------------------------------------------------------------------

namespace {

class TtpSession final : public net::ServerSession {
public:
    explicit TtpSession(TtpService& service) : service_(service), fsm_(wire::Role::ttp) {}

    std::vector<Envelope> on_envelope(const Envelope& env) override {
        if (auto err = fsm_.accept_request(env)) {
            return {wire::make_error(env.session_id, fsm_.next_send_seq(), *err,
                                     "illegal message for ttp session")};
        }
        Envelope resp;
        try {
            resp = dispatch(env);
        } catch (const CdsError& e) {
            resp = wire::make_error(fsm_.session_id(), fsm_.next_send_seq(), e.code(), e.what());
        }
        fsm_.complete_request();
        return {resp};
    }

    std::vector<Envelope> on_decode_error(wire::DecodeStatus status) override {
        ErrorCode code = status == wire::DecodeStatus::frame_too_large
                             ? ErrorCode::frame_too_large
                             : (status == wire::DecodeStatus::protocol_error ? ErrorCode::protocol
                                                                             : ErrorCode::parse);
        return {wire::make_error(fsm_.session_id(), fsm_.next_send_seq(), code,
                                 "undecodable frame")};
    }

private:
    Envelope respond(const Envelope& req, Json payload) {
        return wire::make_envelope(wire::response_for(req.type), fsm_.session_id(),
                                   fsm_.next_send_seq(), std::move(payload));
    }

    Envelope dispatch(const Envelope& env) {
        switch (env.type) {
            case MessageType::ma1_store: {
                std::string customer_id = wire::require_string(env.payload, "customer_id");
                std::string file_name = wire::require_string(env.payload, "file_name");
                Bytes data = wire::require_base64(env.payload, "data");
                std::string file_id = service_.handle_store(customer_id, file_name, data);
                OPENSSL_cleanse(data.data(), data.size());
                return respond(env, Json{{"file_id", file_id}});
            }
            case MessageType::ma1_retrieve: {
                std::string customer_id = wire::require_string(env.payload, "customer_id");
                std::string file_id = wire::require_string(env.payload, "file_id");
                auto result = service_.handle_retrieve(customer_id, file_id);
                return respond(env, Json{{"file_name", result.file_name},
                                         {"data", base64_encode(result.data)}});
            }
            case MessageType::ma1_check: {
                std::string customer_id = wire::require_string(env.payload, "customer_id");
                std::string file_id = wire::require_string(env.payload, "file_id");
                auto result = service_.handle_check(customer_id, file_id);
                return respond(env, Json{{"ok", result.ok},
                                         {"corrupted_indices", result.corrupted_indices}});
            }
            default:
                fail(ErrorCode::protocol, "unhandled ttp message");
        }
    }

    TtpService& service_;
    wire::SessionFsm fsm_;
};

}  // namespace

std::unique_ptr<net::ServerSession> TtpService::open_session() {
    return std::make_unique<TtpSession>(*this);
}

}  // namespace cds
