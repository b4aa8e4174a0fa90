#include "ampm/rng.hpp"

#include <cmath>

#include "ampm/errors.hpp"

namespace ampm {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

Rng Rng::substream(std::uint64_t seed, std::uint64_t index) {
    // Mix the index through one splitmix round so adjacent substreams are
    // decorrelated.
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    std::uint64_t t = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return Rng(t);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
    // 53 random bits into (0,1); +0.5 keeps the value strictly inside.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double sample_tn(double mu, double sd, double lo, double hi, Rng& rng) {
    if (!(sd > 0.0))
        throw DataError("sample_tn: sd must be > 0");
    if (!(lo < hi))
        throw DataError("sample_tn: empty truncation interval [lo, hi)");
    if (!(lo < mu && mu < hi))
        throw DataError("sample_tn: mu must lie inside (lo, hi)");

    // Mean inside the interval keeps plain rejection efficient for every
    // configuration used here.
    for (long attempt = 0; attempt < 100000000L; ++attempt) {
        double d = mu + sd * rng.normal();
        if (d >= lo && d <= hi)
            return d;
    }
    throw DataError("sample_tn: rejection sampling failed to accept");
}

} // namespace ampm
