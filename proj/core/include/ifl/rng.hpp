#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "ifl/errors.hpp"

namespace ifl::rng {

// Counter-based generator: Threefry-2x64 with 20 rounds. Each (key, counter)
// pair maps to an independent 128-bit block, so any replica or grid cell can
// be reproduced in isolation without advancing a shared state.

namespace detail {

inline constexpr std::array<unsigned, 8> kRotations = {16, 42, 12, 31, 16, 32, 24, 21};
inline constexpr std::uint64_t kKeyParity = 0x1BD11BDAA9FC1A22ULL;

inline constexpr std::uint64_t rotl(std::uint64_t x, unsigned r) {
    return (x << r) | (x >> (64u - r));
}

} // namespace detail

inline std::array<std::uint64_t, 2> threefry2x64(std::array<std::uint64_t, 2> counter,
                                                 std::array<std::uint64_t, 2> key) {
    const std::array<std::uint64_t, 3> ks = {
        key[0], key[1], detail::kKeyParity ^ key[0] ^ key[1]};
    std::uint64_t x0 = counter[0] + ks[0];
    std::uint64_t x1 = counter[1] + ks[1];
    for (unsigned round = 1; round <= 20; ++round) {
        x0 += x1;
        x1 = detail::rotl(x1, detail::kRotations[(round - 1) % 8]);
        x1 ^= x0;
        if (round % 4 == 0) {
            const std::uint64_t j = round / 4;
            x0 += ks[j % 3];
            x1 += ks[(j + 1) % 3] + j;
        }
    }
    return {x0, x1};
}

// Stream identifiers pack (purpose, cell, replica) into one 64-bit word:
// 4 purpose bits, 24 cell bits, 36 replica bits.
enum class StreamPurpose : std::uint64_t {
    Moment = 1,
    SmallBall = 2,
    Generic = 3,
};

inline constexpr std::uint64_t kMaxReplica = (1ULL << 36) - 1;
inline constexpr std::uint64_t kMaxCell = (1ULL << 24) - 1;

inline std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t cell,
                                    std::uint64_t replica) {
    if (cell > kMaxCell) throw DomainError("stream cell index exceeds 24 bits");
    if (replica > kMaxReplica) throw DomainError("stream replica index exceeds 36 bits");
    return (static_cast<std::uint64_t>(purpose) << 60) | (cell << 36) | replica;
}

// Maps one 64-bit word to a double strictly inside (0,1): the top 52 bits
// plus a half-bit offset. Every value (k + 1/2) 2^-52 is exactly
// representable, so the range is [2^-53, 1 - 2^-53] with no rounding to the
// endpoints. (With 53 bits the largest value would round up to 1.0.)
inline double to_unit_interval(std::uint64_t word) {
    return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

// One logical random stream: key = (master seed, stream id), counter runs
// over successive blocks. Normal variates come from Box-Muller in pairs.
class CounterStream {
public:
    CounterStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : key_{master_seed, stream_id} {}

    CounterStream(std::uint64_t master_seed, StreamPurpose purpose,
                  std::uint64_t cell, std::uint64_t replica)
        : CounterStream(master_seed, make_stream_id(purpose, cell, replica)) {}

    std::uint64_t next_word() {
        if (avail_ == 0) {
            block_ = threefry2x64({counter_++, 0}, key_);
            avail_ = 2;
        }
        return block_[2 - avail_--];
    }

    double next_uniform() { return to_unit_interval(next_word()); }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t blocks_consumed() const { return counter_; }

private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> block_{};
    int avail_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ifl::rng
