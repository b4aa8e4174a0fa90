#include "ampm/interval_grid.hpp"

#include <cmath>
#include <cstdlib>

#include "ampm/errors.hpp"

namespace ampm {

IntervalGrid::IntervalGrid(double lo, double hi, double width)
    : lo_(lo), hi_(hi), width_(width) {
    if (!(lo < hi))
        throw ConfigError("grid: lo must be < hi");
    if (!(width > 0.0))
        throw ConfigError("grid: width must be > 0");
    double span = hi - lo;
    double n = span / width;
    double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 || rounded < 1.0)
        throw ConfigError("grid: span (hi - lo) must be a whole number of widths");
    if (std::abs((lo + hi) - 24.0) > 1e-9)
        throw ConfigError("grid: must be symmetric about 12 h (lo + hi = 24)");
    bin_count_ = static_cast<int>(rounded);
}

BinRef IntervalGrid::bin(int index) const {
    if (index < 0 || index >= bin_count_)
        throw UsageError("grid: bin index out of range");
    BinRef b;
    b.index = index;
    b.lo = lo_ + index * width_;
    b.hi = lo_ + (index + 1) * width_;
    b.midpoint = lo_ + (index + 0.5) * width_;
    return b;
}

BinRef IntervalGrid::bin_of(double t, bool* clamped) const {
    if (!(t > 0.0))
        throw DataError("grid: interval must be > 0");
    if (clamped)
        *clamped = false;
    if (t < lo_) {
        if (clamped)
            *clamped = true;
        return bin(0);
    }
    if (t >= hi_) {
        if (clamped)
            *clamped = true;
        return bin(bin_count_ - 1);
    }
    int idx = static_cast<int>((t - lo_) / width_);
    if (idx >= bin_count_) // fp guard at the upper boundary
        idx = bin_count_ - 1;
    return bin(idx);
}

BinRef IntervalGrid::complement(const BinRef& b) const {
    // Symmetry about 12 makes the complement an exact index reflection.
    return bin(bin_count_ - 1 - b.index);
}

IntervalGrid parse_grid_spec(const std::string& spec) {
    double v[3];
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        std::size_t next = (i < 2) ? spec.find(':', pos) : spec.size();
        if (next == std::string::npos)
            throw UsageError("grid spec must be LO:HI:WIDTH, got '" + spec + "'");
        std::string part = spec.substr(pos, next - pos);
        char* end = nullptr;
        v[i] = std::strtod(part.c_str(), &end);
        if (part.empty() || end != part.c_str() + part.size())
            throw UsageError("grid spec must be LO:HI:WIDTH, got '" + spec + "'");
        pos = next + 1;
    }
    return IntervalGrid(v[0], v[1], v[2]);
}

} // namespace ampm
