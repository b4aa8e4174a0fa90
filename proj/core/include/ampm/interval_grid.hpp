#pragma once

#include <string>

namespace ampm {

// One milking-interval class: half-open [lo, hi), lower-inclusive.
struct BinRef {
    int index = 0;
    double lo = 0.0;
    double hi = 0.0;
    double midpoint = 0.0;
};

// Uniform discretization of milking-interval time, symmetric about 12 h
// (lo + hi = 24) so every bin has an exact complement bin: the pair of
// midpoints sums to 24, matching AM/PM intervals that sum to a day.
class IntervalGrid {
public:
    IntervalGrid() = default; // 8:16:0.5 default
    IntervalGrid(double lo, double hi, double width);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return width_; }
    int bin_count() const { return bin_count_; }

    BinRef bin(int index) const;

    // Maps t to its bin. t outside [lo, hi) clamps to the nearest edge bin
    // and sets *clamped when provided. t <= 0 is a domain error.
    BinRef bin_of(double t, bool* clamped = nullptr) const;

    // The bin containing 24 - midpoint(b); an involution on this grid.
    BinRef complement(const BinRef& b) const;

    bool operator==(const IntervalGrid& other) const {
        return lo_ == other.lo_ && hi_ == other.hi_ && width_ == other.width_;
    }

private:
    double lo_ = 8.0;
    double hi_ = 16.0;
    double width_ = 0.5;
    int bin_count_ = 16;
};

// Parses the CLI grid syntax "LO:HI:WIDTH".
IntervalGrid parse_grid_spec(const std::string& spec);

} // namespace ampm
