#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cds/crypto.hpp"
#include "cds/random.hpp"
#include "cds/transport.hpp"

namespace cds {

struct TtpConfig {
    std::filesystem::path store_root;
    int rsa_bits = 2048;
    std::size_t fragment_size = 190;
    std::size_t mac_keys = 16;  // K: one-shot integrity challenges per file
    std::size_t max_file_bytes = 12ull * 1024 * 1024;

    void validate() const;
};

// The TTP's only retained artifact per file after outsourcing: geometry, key
// material and the K x fragment_count MAC matrix. Never fragment data.
struct FileManifest {
    std::string file_id;     // 16 random bytes, lowercase hex
    std::string customer_id;
    std::string file_name;
    std::uint64_t original_length = 0;
    std::size_t fragment_size = 0;
    std::size_t fragment_count = 0;
    crypto::AsymKeyPair keypair;                 // private part lives only here
    std::vector<std::vector<Bytes>> stored_macs; // [key_index][fragment_index]
};

// Trusted-third-party layer: encodes and decodes customer data, keeps key
// custody, and runs the MAC challenge audit against the provider.
class TtpService : public net::SessionFactory {
public:
    TtpService(TtpConfig cfg, RandomSource& rng, net::Requester& provider);

    // fragment -> per-file keypair -> encrypt -> MAC matrix -> MA2_PUT ->
    // persist manifest. Nothing is persisted unless the provider acked.
    std::string handle_store(const std::string& customer_id, const std::string& file_name,
                             ByteView data);

    struct RetrieveResult {
        std::string file_name;
        Bytes data;
    };
    RetrieveResult handle_retrieve(const std::string& customer_id, const std::string& file_id);

    struct CheckResult {
        bool ok = false;
        std::vector<std::uint64_t> corrupted_indices;
        std::size_t key_index = 0;  // which challenge key this audit consumed
    };
    // Reveals the lowest unused MAC key to the provider and compares the
    // recomputed tags against the stored row. The key is burned (persistently)
    // once transmitted, whatever the outcome.
    CheckResult handle_check(const std::string& customer_id, const std::string& file_id);

    std::unique_ptr<net::ServerSession> open_session() override;

    const TtpConfig& config() const { return cfg_; }

private:
    std::filesystem::path file_dir(const std::string& file_id) const;
    std::unique_lock<std::mutex> lock_file(const std::string& file_id);
    FileManifest load_manifest(const std::string& file_id);
    crypto::MacKeySet load_keyset(const std::string& file_id);
    void persist_keyset(const std::filesystem::path& dir, const crypto::MacKeySet& keys);

    TtpConfig cfg_;
    RandomSource& rng_;
    net::Requester& provider_;
    std::mutex locks_mu_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace cds
