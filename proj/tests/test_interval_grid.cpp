#include <doctest.h>

#include "ampm/errors.hpp"
#include "ampm/interval_grid.hpp"

using namespace ampm;

TEST_CASE("grid construction and validation") {
    IntervalGrid g(8, 16, 0.5);
    CHECK(g.bin_count() == 16);

    IntervalGrid h(9, 15, 1.0);
    CHECK(h.bin_count() == 6);
    for (int k = 0; k < 6; ++k)
        CHECK(h.bin(k).midpoint == doctest::Approx(9.5 + k).epsilon(1e-12));

    CHECK_THROWS_AS(IntervalGrid(8, 16, 0.7), ConfigError);  // span not divisible
    CHECK_THROWS_AS(IntervalGrid(8, 15, 0.5), ConfigError);  // asymmetric
    CHECK_THROWS_AS(IntervalGrid(16, 8, 0.5), ConfigError);
    CHECK_THROWS_AS(IntervalGrid(8, 16, -1), ConfigError);
}

TEST_CASE("bin lookup is lower-inclusive and clamps at the edges") {
    IntervalGrid g(8, 16, 0.5);
    bool clamped = true;
    BinRef b = g.bin_of(12.3, &clamped);
    CHECK(b.lo == doctest::Approx(12.0));
    CHECK(b.hi == doctest::Approx(12.5));
    CHECK(b.midpoint == doctest::Approx(12.25));
    CHECK_FALSE(clamped);

    b = g.bin_of(16.0, &clamped);
    CHECK(b.index == 15);
    CHECK(clamped);

    b = g.bin_of(7.2, &clamped);
    CHECK(b.index == 0);
    CHECK(clamped);

    CHECK_THROWS_AS(g.bin_of(0.0), DataError);
    CHECK_THROWS_AS(g.bin_of(-3.0), DataError);
}

TEST_CASE("bins partition the span") {
    IntervalGrid g(8, 16, 0.5);
    for (double t = 8.0; t < 16.0; t += 0.01) {
        BinRef b = g.bin_of(t);
        CHECK(b.lo <= t);
        CHECK(t < b.hi);
    }
}

TEST_CASE("complement reflects bins about 12 h") {
    IntervalGrid g(8, 16, 0.5);
    BinRef b = g.bin_of(11.2); // [11.0, 11.5)
    BinRef c = g.complement(b);
    CHECK(c.lo == doctest::Approx(12.5));
    CHECK(c.hi == doctest::Approx(13.0));

    IntervalGrid w1(8, 16, 1.0);
    BinRef d = w1.bin_of(12.0); // [12, 13)
    BinRef e = w1.complement(d);
    CHECK(e.lo == doctest::Approx(11.0));
    CHECK(e.hi == doctest::Approx(12.0));

    for (int k = 0; k < g.bin_count(); ++k) {
        BinRef bin = g.bin(k);
        BinRef comp = g.complement(bin);
        CHECK(bin.midpoint + comp.midpoint == doctest::Approx(24.0).epsilon(1e-12));
        CHECK(g.complement(comp).index == k); // involution
    }
}

TEST_CASE("grid spec parsing") {
    IntervalGrid g = parse_grid_spec("8:16:0.5");
    CHECK(g.bin_count() == 16);
    CHECK_THROWS_AS(parse_grid_spec("8:16"), UsageError);
    CHECK_THROWS_AS(parse_grid_spec("a:b:c"), UsageError);
    CHECK_THROWS_AS(parse_grid_spec("8:16:0.7"), ConfigError);
}
