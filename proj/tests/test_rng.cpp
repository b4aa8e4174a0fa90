#include <doctest.h>

#include <cmath>

#include "ampm/errors.hpp"
#include "ampm/rng.hpp"

using namespace ampm;

TEST_CASE("truncated normal draws stay inside the bounds") {
    Rng rng(123);
    for (int i = 0; i < 10000; ++i) {
        double d = sample_tn(12.0, 1.12, 8.0, 16.0, rng);
        CHECK(d >= 8.0);
        CHECK(d <= 16.0);
    }
}

TEST_CASE("symmetric truncation preserves the mean (Monte Carlo)") {
    Rng rng(2024);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += sample_tn(12.0, 2.0, 6.0, 18.0, rng);
    CHECK(std::abs(sum / n - 12.0) <= 0.03);
}

TEST_CASE("degenerate sd pins every draw to the mean") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i)
        CHECK(std::abs(sample_tn(12.0, 1e-9, 8.0, 16.0, rng) - 12.0) < 1e-6);
}

TEST_CASE("invalid truncation configurations are rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_tn(12, 1, 16, 8, rng), DataError);  // empty interval
    CHECK_THROWS_AS(sample_tn(12, 0.0, 8, 16, rng), DataError);
    CHECK_THROWS_AS(sample_tn(20, 1, 8, 16, rng), DataError);  // mean outside
}

TEST_CASE("substreams are reproducible and decorrelated") {
    Rng a = Rng::substream(42, 7);
    Rng b = Rng::substream(42, 7);
    Rng c = Rng::substream(42, 8);
    bool all_equal_ac = true;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        if (va != c.next_u64())
            all_equal_ac = false;
    }
    CHECK_FALSE(all_equal_ac);
}

TEST_CASE("uniform draws live strictly inside (0,1)") {
    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}
