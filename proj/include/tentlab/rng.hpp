#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tentlab {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
// Every draw is a pure function of (key, counter), so streams indexed by
// (seed, step, mode, slot) can be sampled in any order, on any number of
// workers, and still produce identical values.
namespace philox {

inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;
inline constexpr std::uint32_t kMultA = 0xD2511F53u;
inline constexpr std::uint32_t kMultB = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

inline std::array<std::uint32_t, 4> block(std::uint64_t key,
                                          std::uint32_t c0, std::uint32_t c1,
                                          std::uint32_t c2, std::uint32_t c3) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    std::array<std::uint32_t, 4> x{c0, c1, c2, c3};
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kMultA, x[0], hi0, lo0);
        mul_hi_lo(kMultB, x[2], hi1, lo1);
        x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
        k0 += kWeylA;
        k1 += kWeylB;
    }
    return x;
}

} // namespace philox

// Uniform draw in (0, 1]; never returns 0 so it is log-safe.
inline double uniform01(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                        std::uint64_t c = 0) {
    const auto x = philox::block(seed,
                                 static_cast<std::uint32_t>(a),
                                 static_cast<std::uint32_t>(a >> 32),
                                 static_cast<std::uint32_t>(b),
                                 static_cast<std::uint32_t>(c));
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    return (static_cast<double>(bits) + 1.0) * 0x1p-64;
}

// Standard normal draw via Box-Muller, one block per draw.
inline double gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c = 0) {
    const auto x = philox::block(seed,
                                 static_cast<std::uint32_t>(a),
                                 static_cast<std::uint32_t>(a >> 32),
                                 static_cast<std::uint32_t>(b),
                                 static_cast<std::uint32_t>(c));
    const std::uint64_t u_bits =
        (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    const std::uint64_t v_bits =
        (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    const double u = (static_cast<double>(u_bits) + 1.0) * 0x1p-64; // (0,1]
    const double v = static_cast<double>(v_bits) * 0x1p-64;         // [0,1)
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(two_pi * v);
}

// Derives a per-stream key from a master seed; golden-ratio increment keeps
// adjacent stream indices far apart in key space.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + index * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace tentlab
