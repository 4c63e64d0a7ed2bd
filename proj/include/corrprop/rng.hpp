#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

// Counter-based random streams (Philox4x32-10).
//
// Every stream is addressed by a 64-bit key derived from the global seed and
// a list of integer tags (module id, layer index, replica index, ...) via a
// splitmix64 chain; see derive_stream_key(). Streams consume an incrementing
// 128-bit counter, so independently keyed streams can be drawn from in any
// order (or in parallel) without interfering.

namespace corrprop {

// splitmix64 finalizer (Steele, Lea, Flood 2014)
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Mixes a global seed and a list of stream tags into one 64-bit stream key.
/// derive_stream_key(seed, a, b) != derive_stream_key(seed, b, a) in general;
/// tag order is part of the address.
template <typename... Tags>
inline std::uint64_t derive_stream_key(std::uint64_t seed, Tags... tags) {
    std::uint64_t h = splitmix64(seed);
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(tags))), ...);
    return h;
}

/// Philox4x32 with 10 rounds (Salmon et al. 2011). Produces 128 random bits
/// per counter block; known-answer vectors are pinned in the test suite.
class Philox4x32 {
  public:
    using result_type = std::uint64_t;

    Philox4x32() : Philox4x32(0) {}
    explicit Philox4x32(std::uint64_t key) { set_key(key); }

    void set_key(std::uint64_t key) {
        key_[0] = static_cast<std::uint32_t>(key);
        key_[1] = static_cast<std::uint32_t>(key >> 32);
        counter_ = {0, 0, 0, 0};
        buf_pos_ = 4;
    }

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        constexpr std::uint64_t M0 = 0xD2511F53ull, M1 = 0xCD9E8D57ull;
        constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = M0 * ctr[0];
            const std::uint64_t p1 = M1 * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += W0;
            key[1] += W1;
        }
        return ctr;
    }

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) {
            buf_ = block(counter_, key_);
            advance_counter();
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // UniformRandomBitGenerator interface
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

  private:
    void advance_counter() {
        for (int i = 0; i < 4; ++i) {
            if (++counter_[i] != 0) break;
        }
    }

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;
};

/// One independent random stream with the distributions the samplers need.
/// All transforms are hand-rolled so identical keys give bit-identical values
/// on every platform.
class RandomStream {
  public:
    RandomStream() : engine_(0) {}
    explicit RandomStream(std::uint64_t key) : engine_(key) {}

    template <typename... Tags>
    static RandomStream from(std::uint64_t seed, Tags... tags) {
        return RandomStream(derive_stream_key(seed, tags...));
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_.next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; never returns 0 (safe under log()).
    double uniform01_open_below() { return 1.0 - uniform01(); }

    /// Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01_open_below();
        const double u2 = uniform01();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        cached_ = rad * std::sin(ang);
        have_cached_ = true;
        return rad * std::cos(ang);
    }

    /// Beta(2,1) by inverse CDF: F(x) = x^2 on [0,1], so x = sqrt(u).
    double beta21() { return std::sqrt(uniform01()); }

    /// Uniform integer in {0, ..., n-1} (rejection-free Lemire would be
    /// overkill here; modulo bias is < 2^-32 for the n used).
    std::uint64_t uniform_index(std::uint64_t n) { return engine_.next_u64() % n; }

    Philox4x32& engine() { return engine_; }

  private:
    Philox4x32 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace corrprop
