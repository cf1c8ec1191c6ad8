#include "cds/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <set>

#include "cds/error.hpp"

namespace cds::crypto {

namespace {

constexpr std::size_t kHashLen = 32;

struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

struct BnCtxDeleter {
    void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;

BnPtr bn_new() {
    BnPtr b(BN_new());
    if (!b) fail(ErrorCode::internal, "BN_new failed");
    return b;
}

BnPtr bn_from_bytes(ByteView bytes) {
    BnPtr b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!b) fail(ErrorCode::internal, "BN_bin2bn failed");
    return b;
}

BnPtr bn_from_hex(std::string_view hex, ErrorCode on_error) {
    if (hex.empty() || hex.size() > 4096) fail(on_error, "bad bignum encoding");
    BIGNUM* raw = nullptr;
    std::string z(hex);
    if (BN_hex2bn(&raw, z.c_str()) == 0 || raw == nullptr)
        fail(on_error, "bad bignum encoding");
    return BnPtr(raw);
}

std::string bn_to_hex(const BIGNUM* b) {
    char* s = BN_bn2hex(b);
    if (!s) fail(ErrorCode::internal, "BN_bn2hex failed");
    std::string out(s);
    OPENSSL_free(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Bytes bn_to_padded_bytes(const BIGNUM* b, std::size_t len) {
    Bytes out(len);
    if (BN_bn2binpad(b, out.data(), static_cast<int>(len)) < 0)
        fail(ErrorCode::internal, "BN_bn2binpad failed");
    return out;
}

// MGF1 with SHA-256 (PKCS#1 v2.2, appendix B.2.1).
Bytes mgf1_sha256(ByteView seed, std::size_t out_len) {
    Bytes out;
    out.reserve(out_len + kHashLen);
    std::uint32_t counter = 0;
    while (out.size() < out_len) {
        Bytes block(seed.begin(), seed.end());
        std::uint8_t c[4];
        be32_put(counter++, c);
        block.insert(block.end(), c, c + 4);
        Bytes digest = sha256(block);
        out.insert(out.end(), digest.begin(), digest.end());
    }
    out.resize(out_len);
    return out;
}

const Bytes& lhash_empty() {
    static const Bytes h = sha256({});
    return h;
}

// EME-OAEP encode (empty label). k is the modulus byte-length.
Bytes oaep_encode(ByteView msg, std::size_t k, RandomSource& rng) {
    if (k < kOaepOverhead + 1 || msg.size() > k - kOaepOverhead)
        fail(ErrorCode::invalid_argument, "payload exceeds OAEP capacity");

    const std::size_t db_len = k - kHashLen - 1;
    Bytes db(db_len, 0x00);
    const Bytes& lhash = lhash_empty();
    std::copy(lhash.begin(), lhash.end(), db.begin());
    db[db_len - msg.size() - 1] = 0x01;
    std::copy(msg.begin(), msg.end(), db.end() - static_cast<std::ptrdiff_t>(msg.size()));

    Bytes seed = rng.bytes(kHashLen);
    Bytes db_mask = mgf1_sha256(seed, db_len);
    for (std::size_t i = 0; i < db_len; ++i) db[i] ^= db_mask[i];
    Bytes seed_mask = mgf1_sha256(db, kHashLen);
    for (std::size_t i = 0; i < kHashLen; ++i) seed[i] ^= seed_mask[i];

    Bytes em(k);
    em[0] = 0x00;
    std::copy(seed.begin(), seed.end(), em.begin() + 1);
    std::copy(db.begin(), db.end(), em.begin() + 1 + static_cast<std::ptrdiff_t>(kHashLen));
    return em;
}

// EME-OAEP decode; accumulates failure into one flag so a padding defect
// reveals nothing about where it occurred.
Bytes oaep_decode(ByteView em, std::size_t k) {
    if (em.size() != k || k < kOaepOverhead + 1)
        fail(ErrorCode::decryption_failure, "ciphertext block malformed");

    unsigned bad = em[0];

    Bytes seed(em.begin() + 1, em.begin() + 1 + kHashLen);
    Bytes db(em.begin() + 1 + kHashLen, em.end());
    Bytes seed_mask = mgf1_sha256(db, kHashLen);
    for (std::size_t i = 0; i < kHashLen; ++i) seed[i] ^= seed_mask[i];
    Bytes db_mask = mgf1_sha256(seed, db.size());
    for (std::size_t i = 0; i < db.size(); ++i) db[i] ^= db_mask[i];

    const Bytes& lhash = lhash_empty();
    for (std::size_t i = 0; i < kHashLen; ++i) bad |= db[i] ^ lhash[i];

    // Scan PS for the 0x01 separator without early exit.
    std::size_t sep = 0;
    unsigned found = 0;
    for (std::size_t i = kHashLen; i < db.size(); ++i) {
        unsigned is_one = db[i] == 0x01 ? 1u : 0u;
        unsigned is_zero = db[i] == 0x00 ? 1u : 0u;
        if (!found && is_one) {
            found = 1;
            sep = i;
        }
        bad |= (!found && !is_zero) ? 1u : 0u;
    }
    bad |= found ^ 1u;

    if (bad != 0) fail(ErrorCode::decryption_failure, "OAEP padding check failed");
    return Bytes(db.begin() + static_cast<std::ptrdiff_t>(sep) + 1, db.end());
}

// Random prime with the top two bits set so the product of two such primes
// has the full requested bit length.
BnPtr random_prime(int bits, RandomSource& rng, BN_CTX* ctx) {
    if (bits < 16 || bits % 8 != 0) fail(ErrorCode::invalid_argument, "bad prime size");
    const std::size_t len = static_cast<std::size_t>(bits) / 8;
    for (;;) {
        Bytes cand = rng.bytes(len);
        cand[0] |= 0xc0;
        cand[len - 1] |= 0x01;
        BnPtr p = bn_from_bytes(cand);
        int r = BN_check_prime(p.get(), ctx, nullptr);
        if (r < 0) fail(ErrorCode::internal, "BN_check_prime failed");
        if (r == 1) return p;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Hash / MAC primitives
// ---------------------------------------------------------------------------

Bytes sha256(ByteView data) {
    Bytes out(kHashLen);
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != kHashLen)
        fail(ErrorCode::internal, "SHA-256 failed");
    return out;
}

Bytes hmac_sha256(ByteView key, ByteView message) {
    static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (!mac) fail(ErrorCode::internal, "HMAC fetch failed");

    EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(mac);
    if (!ctx) fail(ErrorCode::internal, "HMAC ctx alloc failed");

    char digest_name[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
        OSSL_PARAM_construct_end(),
    };

    Bytes out(kHashLen);
    std::size_t out_len = 0;
    int ok = EVP_MAC_init(ctx, key.data(), key.size(), params) &&
             EVP_MAC_update(ctx, message.data(), message.size()) &&
             EVP_MAC_final(ctx, out.data(), &out_len, out.size());
    EVP_MAC_CTX_free(ctx);
    if (!ok || out_len != kHashLen) fail(ErrorCode::internal, "HMAC-SHA256 failed");
    return out;
}

Bytes pbkdf2_hmac_sha256(std::string_view password, ByteView salt, unsigned iterations,
                         std::size_t out_len) {
    if (iterations == 0 || out_len == 0)
        fail(ErrorCode::invalid_argument, "pbkdf2: bad parameters");
    Bytes out(out_len);
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                          static_cast<int>(salt.size()), static_cast<int>(iterations),
                          EVP_sha256(), static_cast<int>(out_len), out.data()) != 1)
        fail(ErrorCode::internal, "PBKDF2 failed");
    return out;
}

// ---------------------------------------------------------------------------
// Fragmentation
// ---------------------------------------------------------------------------

std::vector<Fragment> fragment(ByteView data, std::size_t fragment_size) {
    if (fragment_size == 0) fail(ErrorCode::invalid_argument, "fragment_size must be >= 1");
    std::vector<Fragment> out;
    if (data.empty()) {
        out.push_back(Fragment{0, {}});
        return out;
    }
    out.reserve((data.size() + fragment_size - 1) / fragment_size);
    std::uint64_t index = 0;
    for (std::size_t off = 0; off < data.size(); off += fragment_size) {
        std::size_t take = std::min(fragment_size, data.size() - off);
        out.push_back(Fragment{index++, Bytes(data.begin() + static_cast<std::ptrdiff_t>(off),
                                              data.begin() + static_cast<std::ptrdiff_t>(off + take))});
    }
    return out;
}

Bytes reassemble(const std::vector<Fragment>& fragments) {
    if (fragments.empty()) fail(ErrorCode::corrupt_manifest, "no fragments");
    std::vector<const Fragment*> ordered(fragments.size(), nullptr);
    for (const Fragment& f : fragments) {
        if (f.index >= fragments.size())
            fail(ErrorCode::corrupt_manifest, "fragment index out of range");
        if (ordered[f.index] != nullptr)
            fail(ErrorCode::corrupt_manifest, "duplicate fragment index");
        ordered[f.index] = &f;
    }
    // No duplicates and all < n means no gaps either.
    Bytes out;
    for (const Fragment* f : ordered) out.insert(out.end(), f->payload.begin(), f->payload.end());
    return out;
}

// ---------------------------------------------------------------------------
// RSA-OAEP
// ---------------------------------------------------------------------------

struct AsymPublicKey::Impl {
    BnPtr n;
    BnPtr e;
    int bits = 0;
};

struct AsymKeyPair::Impl {
    BnPtr n, e, d, p, q;
    BnPtr dp, dq, qinv;  // CRT exponents, derived
    int bits = 0;
};

namespace {

// dp = d mod (p-1), dq = d mod (q-1), qinv = q^-1 mod p.
void derive_crt(const BIGNUM* d, const BIGNUM* p, const BIGNUM* q, BnPtr& dp, BnPtr& dq,
                BnPtr& qinv, BN_CTX* ctx) {
    BnPtr pm1 = bn_new(), qm1 = bn_new();
    if (!BN_sub(pm1.get(), p, BN_value_one()) || !BN_sub(qm1.get(), q, BN_value_one()))
        fail(ErrorCode::internal, "CRT derivation failed");
    dp = bn_new();
    dq = bn_new();
    if (!BN_mod(dp.get(), d, pm1.get(), ctx) || !BN_mod(dq.get(), d, qm1.get(), ctx))
        fail(ErrorCode::internal, "CRT derivation failed");
    qinv = BnPtr(BN_mod_inverse(nullptr, q, p, ctx));
    if (!qinv) fail(ErrorCode::internal, "CRT derivation failed");
}

}  // namespace

AsymKeyPair AsymKeyPair::generate(int bits, RandomSource& rng) {
    if (bits < kMinServiceRsaBits || bits % 16 != 0)
        fail(ErrorCode::invalid_argument, "keypair size must be even bytes and >= 2048 bits");

    BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) fail(ErrorCode::internal, "BN_CTX_new failed");

    auto impl = std::make_shared<Impl>();
    impl->bits = bits;
    impl->e = bn_new();
    if (!BN_set_word(impl->e.get(), 65537)) fail(ErrorCode::internal, "BN_set_word failed");

    for (;;) {
        impl->p = random_prime(bits / 2, rng, ctx.get());
        impl->q = random_prime(bits / 2, rng, ctx.get());
        if (BN_cmp(impl->p.get(), impl->q.get()) == 0) continue;

        impl->n = bn_new();
        if (!BN_mul(impl->n.get(), impl->p.get(), impl->q.get(), ctx.get()))
            fail(ErrorCode::internal, "BN_mul failed");

        BnPtr pm1 = bn_new(), qm1 = bn_new(), phi = bn_new();
        if (!BN_sub(pm1.get(), impl->p.get(), BN_value_one()) ||
            !BN_sub(qm1.get(), impl->q.get(), BN_value_one()) ||
            !BN_mul(phi.get(), pm1.get(), qm1.get(), ctx.get()))
            fail(ErrorCode::internal, "phi computation failed");

        impl->d = BnPtr(BN_mod_inverse(nullptr, impl->e.get(), phi.get(), ctx.get()));
        if (!impl->d) continue;  // gcd(e, phi) != 1; draw fresh primes

        derive_crt(impl->d.get(), impl->p.get(), impl->q.get(), impl->dp, impl->dq, impl->qinv, ctx.get());
        AsymKeyPair kp;
        kp.impl_ = std::move(impl);
        return kp;
    }
}

AsymKeyPair AsymKeyPair::from_components(std::string_view n_hex, std::string_view e_hex,
                                         std::string_view d_hex, std::string_view p_hex,
                                         std::string_view q_hex) {
    auto impl = std::make_shared<Impl>();
    impl->n = bn_from_hex(n_hex, ErrorCode::corrupt_manifest);
    impl->e = bn_from_hex(e_hex, ErrorCode::corrupt_manifest);
    impl->d = bn_from_hex(d_hex, ErrorCode::corrupt_manifest);
    impl->p = bn_from_hex(p_hex, ErrorCode::corrupt_manifest);
    impl->q = bn_from_hex(q_hex, ErrorCode::corrupt_manifest);

    BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) fail(ErrorCode::internal, "BN_CTX_new failed");
    BnPtr check = bn_new();
    if (!BN_mul(check.get(), impl->p.get(), impl->q.get(), ctx.get()))
        fail(ErrorCode::internal, "BN_mul failed");
    if (BN_cmp(check.get(), impl->n.get()) != 0)
        fail(ErrorCode::corrupt_manifest, "keypair components inconsistent");

    impl->bits = BN_num_bits(impl->n.get());
    derive_crt(impl->d.get(), impl->p.get(), impl->q.get(), impl->dp, impl->dq, impl->qinv, ctx.get());
    AsymKeyPair kp;
    kp.impl_ = std::move(impl);
    return kp;
}

AsymPublicKey AsymKeyPair::public_part() const {
    auto pub = std::make_shared<AsymPublicKey::Impl>();
    pub->n = BnPtr(BN_dup(impl_->n.get()));
    pub->e = BnPtr(BN_dup(impl_->e.get()));
    if (!pub->n || !pub->e) fail(ErrorCode::internal, "BN_dup failed");
    pub->bits = impl_->bits;
    AsymPublicKey out;
    out.impl_ = std::move(pub);
    return out;
}

int AsymKeyPair::bits() const { return impl_->bits; }
std::size_t AsymKeyPair::modulus_bytes() const { return static_cast<std::size_t>((impl_->bits + 7) / 8); }
std::size_t AsymKeyPair::max_plaintext_bytes() const { return modulus_bytes() - kOaepOverhead; }
std::string AsymKeyPair::n_hex() const { return bn_to_hex(impl_->n.get()); }
std::string AsymKeyPair::e_hex() const { return bn_to_hex(impl_->e.get()); }
std::string AsymKeyPair::d_hex() const { return bn_to_hex(impl_->d.get()); }
std::string AsymKeyPair::p_hex() const { return bn_to_hex(impl_->p.get()); }
std::string AsymKeyPair::q_hex() const { return bn_to_hex(impl_->q.get()); }

int AsymPublicKey::bits() const { return impl_->bits; }
std::size_t AsymPublicKey::modulus_bytes() const { return static_cast<std::size_t>((impl_->bits + 7) / 8); }
std::size_t AsymPublicKey::max_plaintext_bytes() const { return modulus_bytes() - kOaepOverhead; }
std::string AsymPublicKey::n_hex() const { return bn_to_hex(impl_->n.get()); }
std::string AsymPublicKey::e_hex() const { return bn_to_hex(impl_->e.get()); }

Bytes AsymPublicKey::encrypt(ByteView plaintext, RandomSource& rng) const {
    const std::size_t k = modulus_bytes();
    Bytes em = oaep_encode(plaintext, k, rng);
    BnPtr m = bn_from_bytes(em);

    BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) fail(ErrorCode::internal, "BN_CTX_new failed");
    BnPtr c = bn_new();
    if (!BN_mod_exp(c.get(), m.get(), impl_->e.get(), impl_->n.get(), ctx.get()))
        fail(ErrorCode::internal, "RSA public operation failed");
    return bn_to_padded_bytes(c.get(), k);
}

Bytes AsymKeyPair::decrypt(ByteView ciphertext) const {
    const std::size_t k = modulus_bytes();
    if (ciphertext.size() != k)
        fail(ErrorCode::decryption_failure, "ciphertext length != modulus length");

    BnPtr c = bn_from_bytes(ciphertext);
    if (BN_ucmp(c.get(), impl_->n.get()) >= 0)
        fail(ErrorCode::decryption_failure, "ciphertext out of range");

    BnCtxPtr ctx(BN_CTX_new());
    if (!ctx) fail(ErrorCode::internal, "BN_CTX_new failed");

    // CRT: m1 = c^dp mod p, m2 = c^dq mod q, m = m2 + q*(qinv*(m1-m2) mod p).
    BnPtr m1 = bn_new(), m2 = bn_new(), h = bn_new(), m = bn_new();
    if (!BN_mod_exp_mont_consttime(m1.get(), c.get(), impl_->dp.get(), impl_->p.get(), ctx.get(),
                                   nullptr) ||
        !BN_mod_exp_mont_consttime(m2.get(), c.get(), impl_->dq.get(), impl_->q.get(), ctx.get(),
                                   nullptr))
        fail(ErrorCode::internal, "RSA private operation failed");
    if (!BN_mod_sub(h.get(), m1.get(), m2.get(), impl_->p.get(), ctx.get()) ||
        !BN_mod_mul(h.get(), h.get(), impl_->qinv.get(), impl_->p.get(), ctx.get()) ||
        !BN_mul(m.get(), h.get(), impl_->q.get(), ctx.get()) ||
        !BN_add(m.get(), m.get(), m2.get()))
        fail(ErrorCode::internal, "RSA private operation failed");

    Bytes em = bn_to_padded_bytes(m.get(), k);
    return oaep_decode(em, k);
}

EncryptedFragment encrypt_fragment(const Fragment& f, const AsymPublicKey& pub,
                                   RandomSource& rng) {
    if (f.payload.size() > pub.max_plaintext_bytes())
        fail(ErrorCode::invalid_argument, "fragment payload exceeds keypair capacity");
    return EncryptedFragment{f.index, pub.encrypt(f.payload, rng)};
}

Fragment decrypt_fragment(const EncryptedFragment& ef, const AsymKeyPair& priv) {
    return Fragment{ef.index, priv.decrypt(ef.ciphertext)};
}

// ---------------------------------------------------------------------------
// MAC keysets
// ---------------------------------------------------------------------------

int MacKeySet::first_unused() const {
    for (std::size_t j = 0; j < used.size(); ++j)
        if (!used[j]) return static_cast<int>(j);
    return -1;
}

MacKeySet generate_mac_keyset(std::string file_id, std::size_t k, RandomSource& rng) {
    if (k == 0) fail(ErrorCode::invalid_argument, "keyset size must be >= 1");
    MacKeySet set;
    set.file_id = std::move(file_id);
    set.keys.reserve(k);
    set.used.assign(k, false);
    std::set<Bytes> seen;
    while (set.keys.size() < k) {
        Bytes key = rng.bytes(32);
        if (!seen.insert(key).second) continue;  // pairwise distinct
        set.keys.push_back(std::move(key));
    }
    return set;
}

Bytes compute_mac(ByteView key, std::string_view file_id, std::uint64_t index,
                  ByteView ciphertext) {
    if (key.size() != 32) fail(ErrorCode::invalid_argument, "MAC key must be 32 bytes");
    Bytes msg;
    msg.reserve(file_id.size() + 9 + ciphertext.size());
    msg.insert(msg.end(), file_id.begin(), file_id.end());
    msg.push_back(0x00);
    std::uint8_t idx[8];
    be64_put(index, idx);
    msg.insert(msg.end(), idx, idx + 8);
    msg.insert(msg.end(), ciphertext.begin(), ciphertext.end());
    return hmac_sha256(key, msg);
}

// ---------------------------------------------------------------------------
// Textbook RSA
// ---------------------------------------------------------------------------

namespace textbook {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t mod) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % mod);
}

bool is_small_prime(std::uint64_t v) {
    if (v < 2) return false;
    for (std::uint64_t f = 2; f * f <= v; ++f)
        if (v % f == 0) return false;
    return true;
}

// Extended Euclid over signed 128-bit words; returns x with a*x = 1 (mod m).
std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m) {
    __int128 t = 0, new_t = 1;
    __int128 r = m, new_r = a % m;
    while (new_r != 0) {
        __int128 quot = r / new_r;
        __int128 tmp = t - quot * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - quot * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1) fail(ErrorCode::invalid_argument, "exponent not invertible");
    if (t < 0) t += m;
    return static_cast<std::uint64_t>(t);
}

}  // namespace

std::uint64_t modpow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
    if (mod == 0) fail(ErrorCode::invalid_argument, "zero modulus");
    std::uint64_t result = 1 % mod;
    base %= mod;
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base, mod);
        base = mulmod(base, base, mod);
        exp >>= 1;
    }
    return result;
}

Keypair keypair_from_primes(std::uint64_t p, std::uint64_t q, std::uint64_t e) {
    if (p == q || !is_small_prime(p) || !is_small_prime(q))
        fail(ErrorCode::invalid_argument, "p and q must be distinct primes");
    if (p > (1ull << 31) || q > (1ull << 31))
        fail(ErrorCode::invalid_argument, "textbook primes limited to 31 bits");
    std::uint64_t phi = (p - 1) * (q - 1);
    if (e < 2 || e >= phi) fail(ErrorCode::invalid_argument, "bad public exponent");
    return Keypair{p * q, e, inverse_mod(e, phi)};
}

}  // namespace textbook

}  // namespace cds::crypto
