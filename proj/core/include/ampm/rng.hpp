#pragma once

#include <cstdint>

namespace ampm {

// Small counter-seedable generator (splitmix64 core, Box-Muller normals).
// The stdlib distributions are implementation-defined sequences; this one is
// bit-reproducible across platforms, which the file formats rely on.
//
// substream(seed, index) derives an independent stream per work unit (cow,
// replicate), so parallel generation stays order- and schedule-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();

    // Uniform on (0, 1), never exactly 0 or 1.
    double uniform();

    // Standard normal via Box-Muller; pairs are cached.
    double normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// One draw from Normal(mu, sd) conditioned on [lo, hi], by rejection.
// Throws DataError on sd <= 0, lo >= hi, or mu outside (lo, hi).
double sample_tn(double mu, double sd, double lo, double hi, Rng& rng);

} // namespace ampm
