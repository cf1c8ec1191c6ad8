#include "cds/random.hpp"

#include <openssl/rand.h>

#include <cstring>

#include "cds/crypto.hpp"
#include "cds/error.hpp"

namespace cds {

std::uint64_t RandomSource::next_u64() {
    std::uint8_t b[8];
    fill(b, sizeof(b));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t RandomSource::below(std::uint64_t bound) {
    if (bound == 0) fail(ErrorCode::invalid_argument, "below: zero bound");
    // Rejection sampling to stay unbiased.
    std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % bound;
}

void SystemRandom::fill(std::uint8_t* out, std::size_t len) {
    if (len == 0) return;
    if (RAND_bytes(out, static_cast<int>(len)) != 1)
        fail(ErrorCode::entropy_failure, "system entropy source failed");
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view label) {
    prefix_.assign(label.begin(), label.end());
    prefix_.push_back(0x00);
    for (int i = 0; i < 8; ++i)
        prefix_.push_back(static_cast<std::uint8_t>(seed >> (56 - 8 * i)));
}

void DeterministicRandom::fill(std::uint8_t* out, std::size_t len) {
    while (len > 0) {
        if (block_used_ == block_.size()) {
            Bytes msg = prefix_;
            for (int i = 0; i < 8; ++i)
                msg.push_back(static_cast<std::uint8_t>(counter_ >> (56 - 8 * i)));
            ++counter_;
            block_ = crypto::sha256(msg);
            block_used_ = 0;
        }
        std::size_t take = std::min(len, block_.size() - block_used_);
        std::memcpy(out, block_.data() + block_used_, take);
        block_used_ += take;
        out += take;
        len -= take;
    }
}

}  // namespace cds
