#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ifl/errors.hpp"
#include "ifl/rng.hpp"

using namespace ifl;

TEST_CASE("threefry2x64 known-answer vectors") {
    using A = std::array<std::uint64_t, 2>;
    const std::uint64_t m = ~0ULL;

    CHECK(rng::threefry2x64(A{0, 0}, A{0, 0}) ==
          A{0xc2b6e3a8c2c69865ULL, 0x6f81ed42f350084dULL});
    CHECK(rng::threefry2x64(A{m, m}, A{m, m}) ==
          A{0xe02cb7c4d95d277aULL, 0xd06633d0893b8b68ULL});
    CHECK(rng::threefry2x64(A{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL},
                            A{0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL}) ==
          A{0x263c7d30bb0f0af1ULL, 0x56be8361d3311526ULL});
    CHECK(rng::threefry2x64(A{1, 0}, A{42, 7}) ==
          A{0x972dc2011c27542dULL, 0x40cb46ff68a8dba6ULL});
}

TEST_CASE("unit-interval map stays strictly inside (0,1)") {
    CHECK(rng::to_unit_interval(0) == 0x1.0p-53);
    CHECK(rng::to_unit_interval(~0ULL) < 1.0);
    CHECK(rng::to_unit_interval(~0ULL) > 0.9999999999999998);
    CHECK(rng::to_unit_interval(1ULL << 63) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("stream id packing and range checks") {
    const auto id = rng::make_stream_id(rng::StreamPurpose::Moment, 5, 9);
    CHECK(id == ((1ULL << 60) | (5ULL << 36) | 9ULL));

    const auto top = rng::make_stream_id(rng::StreamPurpose::SmallBall,
                                         rng::kMaxCell, rng::kMaxReplica);
    CHECK((top >> 60) == 2);
    CHECK(((top >> 36) & 0xffffff) == rng::kMaxCell);
    CHECK((top & rng::kMaxReplica) == rng::kMaxReplica);

    CHECK_THROWS_AS(rng::make_stream_id(rng::StreamPurpose::Moment,
                                        rng::kMaxCell + 1, 0),
                    DomainError);
    CHECK_THROWS_AS(rng::make_stream_id(rng::StreamPurpose::Moment, 0,
                                        rng::kMaxReplica + 1),
                    DomainError);
}

TEST_CASE("counter stream emits threefry blocks in counter order") {
    rng::CounterStream s(123, 456);
    std::vector<std::uint64_t> got;
    for (int i = 0; i < 6; ++i) got.push_back(s.next_word());

    std::vector<std::uint64_t> want;
    for (std::uint64_t c = 0; c < 3; ++c) {
        const auto block = rng::threefry2x64({c, 0}, {123, 456});
        want.push_back(block[0]);
        want.push_back(block[1]);
    }
    CHECK(got == want);
    CHECK(s.blocks_consumed() == 3);
}

TEST_CASE("identically keyed streams replay the same sequence") {
    rng::CounterStream a(7, rng::StreamPurpose::Moment, 2, 11);
    rng::CounterStream b(7, rng::StreamPurpose::Moment, 2, 11);
    for (int i = 0; i < 100; ++i) CHECK(a.next_normal() == b.next_normal());
}

TEST_CASE("distinct replicas give distinct sequences") {
    rng::CounterStream a(7, rng::StreamPurpose::Moment, 2, 11);
    rng::CounterStream b(7, rng::StreamPurpose::Moment, 2, 12);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += (a.next_word() == b.next_word());
    CHECK(same == 0);
}

TEST_CASE("normal variates have plausible first two moments") {
    rng::CounterStream s(2026, rng::StreamPurpose::Generic, 0, 0);
    const int n = 40000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_normal();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}
