#include "cds/provider.hpp"

#include <openssl/crypto.h>

#include <algorithm>
#include <charconv>
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

constexpr std::size_t kFileIdDigits = 32;
constexpr std::size_t kMaxFragmentBytes = 64 * 1024;
constexpr std::size_t kMaxFragmentsPerFile = 1u << 20;

void check_file_id(const std::string& file_id) {
    if (!fsutil::is_hex_id(file_id, kFileIdDigits))
        fail(ErrorCode::invalid_argument, "file_id must be 32 hex digits");
}

}  // namespace

ProviderService::ProviderService(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    fs::create_directories(cfg_.root);
}

std::filesystem::path ProviderService::file_dir(const std::string& file_id) const {
    return cfg_.root / file_id;
}

std::unique_lock<std::mutex> ProviderService::lock_file(const std::string& file_id) {
    std::lock_guard<std::mutex> guard(locks_mu_);
    auto& slot = locks_[file_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return std::unique_lock<std::mutex>(*slot);
}

void ProviderService::store_fragments(const std::string& file_id,
                                      const std::vector<crypto::EncryptedFragment>& fragments) {
    check_file_id(file_id);
    if (fragments.empty() || fragments.size() > kMaxFragmentsPerFile)
        fail(ErrorCode::invalid_argument, "fragment list empty or oversized");

    std::vector<const crypto::EncryptedFragment*> ordered(fragments.size(), nullptr);
    for (const auto& f : fragments) {
        if (f.index >= fragments.size())
            fail(ErrorCode::invalid_argument, "fragment indices must cover 0..n-1");
        if (ordered[f.index] != nullptr)
            fail(ErrorCode::invalid_argument, "duplicate fragment index");
        if (f.ciphertext.empty() || f.ciphertext.size() > kMaxFragmentBytes)
            fail(ErrorCode::invalid_argument, "fragment ciphertext empty or oversized");
        ordered[f.index] = &f;
    }

    auto lock = lock_file(file_id);
    fs::path final_dir = file_dir(file_id);
    if (fs::exists(final_dir)) fail(ErrorCode::conflict, "file_id already stored");

    fs::path staging = cfg_.root / (file_id + ".staging");
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);
    try {
        for (std::size_t i = 0; i < ordered.size(); ++i)
            fsutil::atomic_write(staging / std::to_string(i), ordered[i]->ciphertext);
        fs::rename(staging, final_dir);
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
}

std::vector<std::filesystem::path> ProviderService::fragment_paths(const std::string& file_id) {
    check_file_id(file_id);
    fs::path dir = file_dir(file_id);
    if (!fs::is_directory(dir)) fail(ErrorCode::not_found, "unknown file_id");

    std::vector<std::uint64_t> indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        std::uint64_t idx = 0;
        auto [p, err] = std::from_chars(name.data(), name.data() + name.size(), idx);
        if (err != std::errc() || p != name.data() + name.size())
            fail(ErrorCode::corrupt_store, "stray entry in fragment directory: " + name);
        indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i)
        if (indices[i] != i) fail(ErrorCode::corrupt_store, "fragment missing from store");
    if (indices.empty()) fail(ErrorCode::corrupt_store, "empty fragment directory");

    std::vector<fs::path> paths;
    paths.reserve(indices.size());
    for (std::uint64_t i = 0; i < indices.size(); ++i) paths.push_back(dir / std::to_string(i));
    return paths;
}

std::vector<crypto::EncryptedFragment> ProviderService::retrieve_fragments(
    const std::string& file_id) {
    auto lock = lock_file(file_id);
    std::vector<crypto::EncryptedFragment> out;
    std::uint64_t index = 0;
    for (const fs::path& p : fragment_paths(file_id)) {
        auto data = fsutil::read_file(p);
        if (!data) fail(ErrorCode::corrupt_store, "fragment unreadable: " + p.string());
        out.push_back(crypto::EncryptedFragment{index++, std::move(*data)});
    }
    return out;
}

std::vector<Bytes> ProviderService::recompute_macs(const std::string& file_id, ByteView key) {
    auto lock = lock_file(file_id);
    std::vector<Bytes> tags;
    std::uint64_t index = 0;
    for (const fs::path& p : fragment_paths(file_id)) {
        auto data = fsutil::read_file(p);
        if (!data) fail(ErrorCode::corrupt_store, "fragment unreadable: " + p.string());
        tags.push_back(crypto::compute_mac(key, file_id, index++, *data));
    }
    return tags;
}

void ProviderService::tamper(const std::string& file_id, std::uint64_t index,
                             std::uint64_t byte_offset, std::uint8_t xor_value) {
    if (!cfg_.test_mode) fail(ErrorCode::forbidden, "tamper hook disabled in service mode");
    check_file_id(file_id);
    auto lock = lock_file(file_id);
    fs::path p = file_dir(file_id) / std::to_string(index);
    auto data = fsutil::read_file(p);
    if (!data) fail(ErrorCode::not_found, "no such fragment");
    if (byte_offset >= data->size()) fail(ErrorCode::invalid_argument, "byte_offset out of range");
    (*data)[byte_offset] ^= xor_value;
    fsutil::atomic_write(p, *data);
}

// ---------------------------------------------------------------------------
// Wire adapter
// ---------------------------------------------------------------------------

namespace {

class ProviderSession final : public net::ServerSession {
public:
    explicit ProviderSession(ProviderService& service)
        : service_(service), fsm_(wire::Role::provider) {}

    std::vector<Envelope> on_envelope(const Envelope& env) override {
        if (auto err = fsm_.accept_request(env)) {
            return {wire::make_error(env.session_id, fsm_.next_send_seq(), *err,
                                     "illegal message for provider session")};
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

    static std::vector<crypto::EncryptedFragment> parse_fragments(const Json& payload) {
        const Json& arr = wire::require_array(payload, "fragments");
        std::vector<crypto::EncryptedFragment> frags;
        frags.reserve(arr.size());
        for (const Json& item : arr) {
            if (!item.is_object())
                fail(ErrorCode::invalid_argument, "fragment entries must be objects");
            frags.push_back(crypto::EncryptedFragment{wire::require_uint(item, "index"),
                                                      wire::require_base64(item, "ciphertext")});
        }
        return frags;
    }

    Envelope dispatch(const Envelope& env) {
        switch (env.type) {
            case MessageType::ma2_put: {
                std::string file_id = wire::require_string(env.payload, "file_id");
                service_.store_fragments(file_id, parse_fragments(env.payload));
                return respond(env, Json{{"ok", true}});
            }
            case MessageType::ma2_get: {
                std::string file_id = wire::require_string(env.payload, "file_id");
                Json frags = Json::array();
                for (const auto& f : service_.retrieve_fragments(file_id))
                    frags.push_back(Json{{"index", f.index},
                                         {"ciphertext", base64_encode(f.ciphertext)}});
                return respond(env, Json{{"fragments", std::move(frags)}});
            }
            case MessageType::ma2_mac_challenge: {
                std::string file_id = wire::require_string(env.payload, "file_id");
                Bytes key = wire::require_base64(env.payload, "key");
                wire::require_uint(env.payload, "key_index");  // schema only; keys are opaque here
                Json tags = Json::array();
                try {
                    std::vector<Bytes> computed = service_.recompute_macs(file_id, key);
                    for (std::size_t i = 0; i < computed.size(); ++i)
                        tags.push_back(Json{{"index", i}, {"tag", base64_encode(computed[i])}});
                } catch (...) {
                    OPENSSL_cleanse(key.data(), key.size());
                    throw;
                }
                // Revealed key must not outlive the challenge.
                OPENSSL_cleanse(key.data(), key.size());
                return respond(env, Json{{"tags", std::move(tags)}});
            }
            case MessageType::ma2_tamper: {
                std::string file_id = wire::require_string(env.payload, "file_id");
                std::uint64_t index = wire::require_uint(env.payload, "index");
                std::uint64_t offset = wire::require_uint(env.payload, "byte_offset");
                std::uint64_t xv = wire::require_uint(env.payload, "xor_value");
                if (xv > 0xff) fail(ErrorCode::invalid_argument, "xor_value out of range");
                service_.tamper(file_id, index, offset, static_cast<std::uint8_t>(xv));
                return respond(env, Json{{"ok", true}});
            }
            default:
                fail(ErrorCode::protocol, "unhandled provider message");
        }
    }

    ProviderService& service_;
    wire::SessionFsm fsm_;
};

}  // namespace

std::unique_ptr<net::ServerSession> ProviderService::open_session() {
    return std::make_unique<ProviderSession>(*this);
}

}  // namespace cds
