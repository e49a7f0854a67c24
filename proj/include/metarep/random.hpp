#pragma once

// Counter-based random streams.
//
// Every stream is addressed by (seed, stream_id). Block k of a stream is
// Philox4x32-10 applied to the counter (k, stream_id) under the key `seed`,
// so any block can be computed without touching the others. Chunked Monte
// Carlo gives each chunk its own stream_id, which makes results independent
// of how chunks are scheduled across threads.
//
// Conversions to doubles use only integer arithmetic plus std::log, std::sqrt,
// std::cos and std::sin, so sequences match across IEEE-754 platforms up to
// the libm rounding of those four functions.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace metarep {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace detail

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                     std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::kPhiloxW0;
            key[1] += detail::kPhiloxW1;
        }
        std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
        detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
        detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        if (word_ == 4) refill();
        const std::uint64_t hi = block_[word_];
        const std::uint64_t lo = block_[word_ + 1];
        word_ += 2;
        return (hi << 32) | lo;
    }

    // Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_index_), static_cast<std::uint32_t>(block_index_ >> 32),
            static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                               static_cast<std::uint32_t>(seed_ >> 32)};
        block_ = philox4x32_10(ctr, key);
        ++block_index_;
        word_ = 0;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int word_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace metarep
