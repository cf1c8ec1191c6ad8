#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cds/bytes.hpp"

namespace cds {

// All key material, identifiers, salts and padding seeds are drawn through
// this interface so the simulation harness can replay runs bit-for-bit.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::uint8_t* out, std::size_t len) = 0;

    Bytes bytes(std::size_t len) {
        Bytes b(len);
        if (len > 0) fill(b.data(), len);
        return b;
    }

    std::uint64_t next_u64();
    // Uniform in [0, bound); bound must be nonzero.
    std::uint64_t below(std::uint64_t bound);
};

// OS entropy via OpenSSL.
class SystemRandom final : public RandomSource {
public:
    void fill(std::uint8_t* out, std::size_t len) override;
};

// SHA-256 counter generator: stream block i is SHA256(label || seed || i).
// Not for production keys; exists for reproducible simulation runs.
class DeterministicRandom final : public RandomSource {
public:
    DeterministicRandom(std::uint64_t seed, std::string_view label);

    void fill(std::uint8_t* out, std::size_t len) override;

private:
    Bytes prefix_;
    std::uint64_t counter_ = 0;
    Bytes block_;
    std::size_t block_used_ = 0;
};

}  // namespace cds
