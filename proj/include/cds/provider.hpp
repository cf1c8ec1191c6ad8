#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cds/crypto.hpp"
#include "cds/transport.hpp"

namespace cds {

struct ProviderConfig {
    std::filesystem::path root;
    // Enables the MA2_TAMPER adversary hook; refuse it in service mode.
    bool test_mode = false;
};

// Cloud-Provider layer: stores opaque ciphertext fragments, returns them, and
// answers MAC recomputation challenges. Holds no keys and no plaintext.
class ProviderService : public net::SessionFactory {
public:
    explicit ProviderService(ProviderConfig cfg);

    // Fragments must carry indices 0..n-1; all are durably written before the
    // call returns. Partial writes are cleaned up on failure.
    void store_fragments(const std::string& file_id,
                         const std::vector<crypto::EncryptedFragment>& fragments);

    std::vector<crypto::EncryptedFragment> retrieve_fragments(const std::string& file_id);

    // Tag per stored fragment in index order. The key is the caller's; this
    // service never persists it.
    std::vector<Bytes> recompute_macs(const std::string& file_id, ByteView key);

    // XORs one stored ciphertext byte in place. Test mode only.
    void tamper(const std::string& file_id, std::uint64_t index, std::uint64_t byte_offset,
                std::uint8_t xor_value);

    std::unique_ptr<net::ServerSession> open_session() override;

    const ProviderConfig& config() const { return cfg_; }

private:
    std::filesystem::path file_dir(const std::string& file_id) const;
    std::vector<std::filesystem::path> fragment_paths(const std::string& file_id);
    std::unique_lock<std::mutex> lock_file(const std::string& file_id);

    ProviderConfig cfg_;
    std::mutex locks_mu_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace cds
