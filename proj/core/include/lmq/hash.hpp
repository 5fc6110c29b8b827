#pragma once

#include <cstdint>

namespace lmq {

// splitmix64: used to derive per-row hash parameters and auxiliary seeds
// deterministically from one 64-bit seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Murmur3 64-bit finalizer. Full-avalanche mix, used for key-to-partition
// ownership so it stays uncorrelated with the sketch row hashes.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// Pairwise-independent multiply-shift hash: h(x) = high 64 bits of a*x + b
// with a, b uniform 128-bit (a odd). One instance per sketch row.
class MultiplyShiftHash {
public:
    MultiplyShiftHash() = default;

    explicit MultiplyShiftHash(std::uint64_t& seed_state) {
        const std::uint64_t a_hi = splitmix64(seed_state);
        const std::uint64_t a_lo = splitmix64(seed_state) | 1ULL;
        const std::uint64_t b_hi = splitmix64(seed_state);
        const std::uint64_t b_lo = splitmix64(seed_state);
        a_ = (static_cast<unsigned __int128>(a_hi) << 64) | a_lo;
        b_ = (static_cast<unsigned __int128>(b_hi) << 64) | b_lo;
    }

    std::uint64_t operator()(std::uint64_t x) const {
        return static_cast<std::uint64_t>((a_ * x + b_) >> 64);
    }

private:
    unsigned __int128 a_ = 1;
    unsigned __int128 b_ = 0;
};

}  // namespace lmq
