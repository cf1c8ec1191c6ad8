#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "cds/crypto.hpp"
#include "cds/error.hpp"
#include "cds/random.hpp"

using namespace cds;
using namespace cds::crypto;

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t len) {
    Bytes b(len);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng());
    return b;
}

// One service-grade keypair for the whole binary; generation is the slow part.
const AsymKeyPair& test_keypair() {
    static DeterministicRandom rng(0xc0ffee, "test-keypair");
    static AsymKeyPair kp = AsymKeyPair::generate(2048, rng);
    return kp;
}

}  // namespace

// ---------------------------------------------------------------------------
// fragmentation
// ---------------------------------------------------------------------------

TEST_CASE("fragment splits with a short tail") {
    Bytes data = to_bytes("0123456789");
    auto frags = fragment(data, 4);
    REQUIRE(frags.size() == 3);
    CHECK(frags[0].payload.size() == 4);
    CHECK(frags[1].payload.size() == 4);
    CHECK(frags[2].payload.size() == 2);
    CHECK(frags[0].index == 0);
    CHECK(frags[1].index == 1);
    CHECK(frags[2].index == 2);
}

TEST_CASE("fragment of empty data yields one empty fragment") {
    auto frags = fragment({}, 4);
    REQUIRE(frags.size() == 1);
    CHECK(frags[0].index == 0);
    CHECK(frags[0].payload.empty());
}

TEST_CASE("fragment with exact multiple has no tail") {
    auto frags = fragment(to_bytes("abcdefgh"), 4);
    REQUIRE(frags.size() == 2);
    CHECK(frags[0].payload.size() == 4);
    CHECK(frags[1].payload.size() == 4);
}

TEST_CASE("fragment rejects zero size") {
    CHECK_THROWS_AS(fragment(to_bytes("x"), 0), CdsError);
}

TEST_CASE("reassemble inverts fragment") {
    std::mt19937_64 rng(11);
    const std::size_t sizes[] = {0, 1, 3, 4, 5, 64, 190, 1024};
    for (std::size_t len : sizes) {
        Bytes data = random_bytes(rng, len);
        for (std::size_t fs : {1, 4, 190}) {
            auto frags = fragment(data, fs);
            CHECK(reassemble(frags) == data);
        }
    }
}

TEST_CASE("reassemble is order-insensitive but gap- and dup-sensitive") {
    auto frags = fragment(to_bytes("abcdef"), 2);
    std::swap(frags[0], frags[2]);
    CHECK(to_string(reassemble(frags)) == "abcdef");

    auto gap = fragment(to_bytes("abcdef"), 2);
    gap.erase(gap.begin() + 1);  // indices {0,2}
    CHECK_THROWS_AS(reassemble(gap), CdsError);

    auto dup = fragment(to_bytes("abcdef"), 2);
    dup[1].index = 0;
    CHECK_THROWS_AS(reassemble(dup), CdsError);

    CHECK_THROWS_AS(reassemble({}), CdsError);
}

// ---------------------------------------------------------------------------
// textbook RSA
// ---------------------------------------------------------------------------

TEST_CASE("textbook keypair from p=61 q=53 matches the classic vector") {
    auto kp = textbook::keypair_from_primes(61, 53, 17);
    CHECK(kp.n == 3233);
    CHECK(kp.e == 17);
    CHECK(kp.d == 2753);
}

TEST_CASE("textbook raw primitive round-trips the classic vector") {
    auto kp = textbook::keypair_from_primes(61, 53, 17);
    CHECK(textbook::raw_encrypt(65, kp.e, kp.n) == 2790);
    CHECK(textbook::raw_decrypt(2790, kp.d, kp.n) == 65);
}

TEST_CASE("textbook modpow agrees with a brute-force oracle") {
    auto slow_modpow = [](std::uint64_t b, std::uint64_t e, std::uint64_t m) {
        std::uint64_t r = 1 % m;
        for (std::uint64_t i = 0; i < e; ++i) r = (r * b) % m;
        return r;
    };
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        std::uint64_t m = 2 + rng() % 50000;
        std::uint64_t b = rng() % m;
        std::uint64_t e = rng() % 500;
        CHECK(textbook::modpow(b, e, m) == slow_modpow(b, e, m));
    }
}

TEST_CASE("textbook round-trip over the full message space") {
    auto kp = textbook::keypair_from_primes(61, 53, 17);
    for (std::uint64_t m = 0; m < 3233; m += 13)
        CHECK(textbook::raw_decrypt(textbook::raw_encrypt(m, kp.e, kp.n), kp.d, kp.n) == m);
}

TEST_CASE("textbook keypair rejects bad inputs") {
    CHECK_THROWS_AS(textbook::keypair_from_primes(60, 53, 17), CdsError);   // not prime
    CHECK_THROWS_AS(textbook::keypair_from_primes(61, 61, 17), CdsError);   // equal
    CHECK_THROWS_AS(textbook::keypair_from_primes(61, 53, 15), CdsError);   // gcd(15,3120)!=1
}

// ---------------------------------------------------------------------------
// service RSA-OAEP
// ---------------------------------------------------------------------------

TEST_CASE("generated keypair has the requested geometry") {
    const auto& kp = test_keypair();
    CHECK(kp.bits() == 2048);
    CHECK(kp.modulus_bytes() == 256);
    CHECK(kp.max_plaintext_bytes() == 190);
    CHECK(kp.e_hex() == "010001");
}

TEST_CASE("generate rejects sub-service sizes") {
    DeterministicRandom rng(1, "small");
    CHECK_THROWS_AS(AsymKeyPair::generate(512, rng), CdsError);
}

TEST_CASE("encrypt/decrypt round-trips fragments of every size") {
    const auto& kp = test_keypair();
    auto pub = kp.public_part();
    DeterministicRandom rng(99, "oaep");
    std::mt19937_64 drng(3);
    for (std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{189}, std::size_t{190}}) {
        Fragment f{7, random_bytes(drng, len)};
        EncryptedFragment ef = encrypt_fragment(f, pub, rng);
        CHECK(ef.index == 7);
        CHECK(ef.ciphertext.size() == kp.modulus_bytes());
        Fragment back = decrypt_fragment(ef, kp);
        CHECK(back == f);
    }
}

TEST_CASE("oversize payload is rejected before encryption") {
    const auto& kp = test_keypair();
    auto pub = kp.public_part();
    DeterministicRandom rng(1, "x");
    std::mt19937_64 drng(4);
    Fragment f{0, random_bytes(drng, 191)};
    CHECK_THROWS_AS(encrypt_fragment(f, pub, rng), CdsError);
}

TEST_CASE("randomized padding: repeated encryptions differ") {
    const auto& kp = test_keypair();
    auto pub = kp.public_part();
    SystemRandom rng;
    Fragment f{0, to_bytes("same plaintext")};
    std::set<Bytes> seen;
    for (int i = 0; i < 100; ++i) seen.insert(encrypt_fragment(f, pub, rng).ciphertext);
    CHECK(seen.size() == 100);
}

TEST_CASE("wrong keypair fails cleanly") {
    const auto& kp = test_keypair();
    DeterministicRandom krng(0xdead, "other-keypair");
    AsymKeyPair other = AsymKeyPair::generate(2048, krng);
    DeterministicRandom rng(2, "x");
    EncryptedFragment ef = encrypt_fragment(Fragment{0, to_bytes("secret")}, kp.public_part(), rng);
    CHECK_THROWS_AS(decrypt_fragment(ef, other), CdsError);
}

TEST_CASE("corrupted ciphertext fails cleanly") {
    const auto& kp = test_keypair();
    DeterministicRandom rng(3, "x");
    EncryptedFragment ef = encrypt_fragment(Fragment{1, to_bytes("payload")}, kp.public_part(), rng);
    SUBCASE("bit flip") {
        ef.ciphertext[100] ^= 0x20;
        CHECK_THROWS_AS(decrypt_fragment(ef, kp), CdsError);
    }
    SUBCASE("wrong length") {
        ef.ciphertext.pop_back();
        CHECK_THROWS_AS(decrypt_fragment(ef, kp), CdsError);
    }
}

TEST_CASE("keypair survives component round-trip") {
    const auto& kp = test_keypair();
    AsymKeyPair back = AsymKeyPair::from_components(kp.n_hex(), kp.e_hex(), kp.d_hex(),
                                                    kp.p_hex(), kp.q_hex());
    CHECK(back.bits() == kp.bits());
    DeterministicRandom rng(4, "x");
    EncryptedFragment ef = encrypt_fragment(Fragment{0, to_bytes("roundtrip")},
                                            kp.public_part(), rng);
    CHECK(to_string(decrypt_fragment(ef, back).payload) == "roundtrip");
}

TEST_CASE("from_components rejects inconsistent factors") {
    const auto& kp = test_keypair();
    CHECK_THROWS_AS(AsymKeyPair::from_components(kp.n_hex(), kp.e_hex(), kp.d_hex(),
                                                 kp.p_hex(), kp.p_hex()),
                    CdsError);
}

// ---------------------------------------------------------------------------
// HMAC + MAC keysets
// ---------------------------------------------------------------------------

TEST_CASE("HMAC-SHA256 published vectors") {
    // RFC 4231 test cases 1, 2 and 6.
    Bytes key1(20, 0x0b);
    CHECK(to_hex(hmac_sha256(key1, to_bytes("Hi There"))) ==
          "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");

    CHECK(to_hex(hmac_sha256(to_bytes("Jefe"), to_bytes("what do ya want for nothing?"))) ==
          "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");

    Bytes key6(131, 0xaa);
    CHECK(to_hex(hmac_sha256(key6, to_bytes("Test Using Larger Than Block-Size Key - Hash Key First"))) ==
          "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54");
}

TEST_CASE("compute_mac is deterministic and separates domains") {
    Bytes key(32, 0x42);
    Bytes ct = to_bytes("ciphertext bytes");
    Bytes t1 = compute_mac(key, "file-a", 3, ct);
    CHECK(t1.size() == 32);
    CHECK(compute_mac(key, "file-a", 3, ct) == t1);
    CHECK(compute_mac(key, "file-b", 3, ct) != t1);    // file id
    CHECK(compute_mac(key, "file-a", 4, ct) != t1);    // index
    Bytes key2(32, 0x43);
    CHECK(compute_mac(key2, "file-a", 3, ct) != t1);   // key
}

TEST_CASE("compute_mac reacts to every single-bit flip") {
    std::mt19937_64 rng(21);
    Bytes key = random_bytes(rng, 32);
    Bytes ct = random_bytes(rng, 256);
    Bytes base = compute_mac(key, "f", 0, ct);
    for (int i = 0; i < 1000; ++i) {
        Bytes mutated = ct;
        std::size_t byte = rng() % mutated.size();
        mutated[byte] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        CHECK(compute_mac(key, "f", 0, mutated) != base);
    }
}

TEST_CASE("compute_mac requires a 32-byte key") {
    CHECK_THROWS_AS(compute_mac(Bytes(16, 0x01), "f", 0, {}), CdsError);
}

TEST_CASE("mac keysets are fresh, distinct and unused") {
    DeterministicRandom rng(8, "keys");
    MacKeySet set = generate_mac_keyset("fid", 16, rng);
    CHECK(set.size() == 16);
    CHECK(set.file_id == "fid");
    std::set<Bytes> uniq(set.keys.begin(), set.keys.end());
    CHECK(uniq.size() == 16);
    for (bool u : set.used) CHECK(!u);
    CHECK(set.first_unused() == 0);
    CHECK_THROWS_AS(generate_mac_keyset("fid", 0, rng), CdsError);
}
