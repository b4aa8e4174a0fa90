#pragma once

#include <cstdint>

#include "ampm/records.hpp"

namespace ampm {

// Per-cow saturating yield curve: y(t) is the milk accumulated t hours after
// the previous milking,
//
//   y(t) = y720 * (2k + 1) * t / (24k + t)
//
// a Michaelis-Menten curve whose half-saturation constant k is expressed as a
// fraction of a 24 h day, rescaled so that y(12 h) = y720 exactly. Strictly
// increasing and concave for k > 0; the asymptote is y720 * (2k + 1).
struct CurveParams {
    double y720 = 12.0; // kg accumulated over a 720-minute interval
    double k = 0.8;     // dimensionless shape, half-saturation at 24k hours
};

double curve_yield(const CurveParams& p, double t_hours);

struct SimConfig {
    int n_cows = 3000;

    double y720_mean = 12.0;
    double y720_sd = 2.0;
    double k_mean = 0.8;
    double k_sd = 0.1;
    // Curve parameters are truncated at mean +- param_trunc_sds * sd.
    double param_trunc_sds = 3.0;

    double interval_mean = 12.0; // hours
    double interval_sd = 1.12;
    double interval_lo = 8.0;
    double interval_hi = 16.0;

    // Additive weighing error per recorded milking, in kg. The recorded
    // daily yield is the sum of the two recorded partials, so partition
    // identities hold exactly regardless of this value.
    double noise_sd = 0.46;

    double dim_value = 150.0; // constant days-in-milk stamped on every record

    std::uint64_t seed = 1;

    // Throws ConfigError when invalid.
    void validate() const;
};

// Simulates 2 * n_cows records: per cow, one AM and one PM milking whose
// intervals sum to 24 h. Reproducible bit-for-bit from the seed; each cow
// draws from its own counter-derived substream.
MilkingDataset simulate_herd(const SimConfig& cfg);

} // namespace ampm
