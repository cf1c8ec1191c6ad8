#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cds/bytes.hpp"
#include "cds/random.hpp"

namespace cds::crypto {

// ---------------------------------------------------------------------------
// Hash / MAC primitives
// ---------------------------------------------------------------------------

Bytes sha256(ByteView data);
Bytes hmac_sha256(ByteView key, ByteView message);
Bytes pbkdf2_hmac_sha256(std::string_view password, ByteView salt, unsigned iterations,
                         std::size_t out_len);

// ---------------------------------------------------------------------------
// Fragmentation
// ---------------------------------------------------------------------------

struct Fragment {
    std::uint64_t index = 0;
    Bytes payload;

    bool operator==(const Fragment&) const = default;
};

struct EncryptedFragment {
    std::uint64_t index = 0;
    Bytes ciphertext;  // always exactly the RSA modulus byte-length

    bool operator==(const EncryptedFragment&) const = default;
};

// Splits data into ceil(len/fragment_size) fragments; an empty input yields
// one empty fragment so every file is auditable.
std::vector<Fragment> fragment(ByteView data, std::size_t fragment_size);

// Inverse of fragment(). Indices must form 0..n-1 with no gaps or duplicates;
// anything else throws corrupt_manifest.
Bytes reassemble(const std::vector<Fragment>& fragments);

// ---------------------------------------------------------------------------
// RSA-OAEP(SHA-256) fragment encryption
//
// Per-fragment asymmetric encryption with randomized padding: two encryptions
// of the same payload differ. Padding overhead is 2*32+2 = 66 bytes, so a
// 2048-bit modulus carries at most 190 payload bytes per fragment.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kOaepOverhead = 66;
inline constexpr int kMinServiceRsaBits = 2048;

class AsymKeyPair;

class AsymPublicKey {
public:
    int bits() const;
    std::size_t modulus_bytes() const;
    std::size_t max_plaintext_bytes() const;

    std::string n_hex() const;
    std::string e_hex() const;

    // OAEP-encrypts payload (<= max_plaintext_bytes) into a modulus-sized block.
    Bytes encrypt(ByteView plaintext, RandomSource& rng) const;

private:
    friend class AsymKeyPair;
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

class AsymKeyPair {
public:
    // Fresh keypair with distinct random primes, e = 65537, d = e^-1 mod phi(n).
    // bits must be even and >= kMinServiceRsaBits; small moduli live only in
    // the textbook primitives below.
    static AsymKeyPair generate(int bits, RandomSource& rng);

    // Rebuild from persisted components (lowercase hex, no leading zeros).
    static AsymKeyPair from_components(std::string_view n_hex, std::string_view e_hex,
                                       std::string_view d_hex, std::string_view p_hex,
                                       std::string_view q_hex);

    AsymPublicKey public_part() const;

    int bits() const;
    std::size_t modulus_bytes() const;
    std::size_t max_plaintext_bytes() const;

    std::string n_hex() const;
    std::string e_hex() const;
    std::string d_hex() const;
    std::string p_hex() const;
    std::string q_hex() const;

    // OAEP-decrypts a modulus-sized block; any padding or size defect throws
    // decryption_failure with no partial output.
    Bytes decrypt(ByteView ciphertext) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

EncryptedFragment encrypt_fragment(const Fragment& f, const AsymPublicKey& pub, RandomSource& rng);
Fragment decrypt_fragment(const EncryptedFragment& ef, const AsymKeyPair& priv);

// ---------------------------------------------------------------------------
// MAC keysets and the canonical fragment MAC
// ---------------------------------------------------------------------------

struct MacKeySet {
    std::string file_id;
    std::vector<Bytes> keys;  // 32 bytes each, pairwise distinct
    std::vector<bool> used;   // burned once revealed; never reverts

    std::size_t size() const { return keys.size(); }
    // Lowest-index unused key, or -1 when exhausted.
    int first_unused() const;
};

MacKeySet generate_mac_keyset(std::string file_id, std::size_t k, RandomSource& rng);

// Canonical message, bit-exact across services:
//   file_id bytes || 0x00 || 8-byte big-endian index || ciphertext
// Tag is HMAC-SHA256 under a 32-byte key.
Bytes compute_mac(ByteView key, std::string_view file_id, std::uint64_t index,
                  ByteView ciphertext);

// ---------------------------------------------------------------------------
// Textbook RSA over machine words. Cross-check primitives for the classic
// p=61, q=53 vector; never used on the service path.
// ---------------------------------------------------------------------------

namespace textbook {

struct Keypair {
    std::uint64_t n = 0;
    std::uint64_t e = 0;
    std::uint64_t d = 0;
};

std::uint64_t modpow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod);

// n = p*q, d = e^-1 mod (p-1)(q-1). p and q must be distinct primes and e
// coprime to phi.
Keypair keypair_from_primes(std::uint64_t p, std::uint64_t q, std::uint64_t e);

inline std::uint64_t raw_encrypt(std::uint64_t m, std::uint64_t e, std::uint64_t n) {
    return modpow(m, e, n);
}
inline std::uint64_t raw_decrypt(std::uint64_t c, std::uint64_t d, std::uint64_t n) {
    return modpow(c, d, n);
}

}  // namespace textbook

}  // namespace cds::crypto
