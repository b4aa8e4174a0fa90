#pragma once

#include <cstdint>
#include <vector>

#include "ampm/interval_grid.hpp"
#include "ampm/records.hpp"
#include "ampm/yield_models.hpp"

namespace ampm {

// Per (session, bin) correction factors derived from a fitted model:
// additive amounts added to b*x, or multiplicative ratios applied to x.
struct FactorTable {
    enum class Kind { Additive, Multiplicative };

    Kind kind = Kind::Additive;
    IntervalGrid grid;
    ModelId source_model = ModelId::M1;
    double b = 0.0; // accompanying partial-yield coefficient (additive tables)
    std::vector<double> values;          // 2 * bin_count, AM block first
    std::vector<std::uint8_t> borrowed;  // entry came from a neighboring bin

    double value_at(Session s, int bin) const;
    bool borrowed_at(Session s, int bin) const;
};

// Additive table for M1 / M2B / M3B. M1 requires the fitted grid; the
// smoothed models may be evaluated on any symmetric grid.
FactorTable acf_table(const FittedModel& m, const IntervalGrid& grid);

// Multiplicative table for M4 / M5 / M6B / M7B, evaluated at the grid's
// midpoints with the supplied moments (used by the log-scale model's
// bin-level terms).
FactorTable mcf_table(const FittedModel& m, const IntervalGrid& grid,
                      const BinMoments& moments);

// The two additive factors belonging to one test-day configuration: the AM
// factor at `bin` plus the PM factor at its complement bin.
double pair_sum(const FactorTable& t, const BinRef& bin,
                const BinMoments& moments);

// Recovers one session's multiplicative factor from the other's:
// f -> f / (f - 1). An involution on (1, inf).
double complement_mcf(double f);

// Factor for a weighted subset of the day's milkings under a proportion
// model fit: 1 / (sum of subset intercepts + beta * sum of subset bin
// midpoints). The AM session is taken at `bin`, the PM session at its
// complement. A singleton subset reduces to the single-session factor.
double mcf_subset(const FittedModel& m, const std::vector<Session>& subset,
                  const IntervalGrid& grid, const BinRef& bin);

// Daily yield adjusted for days in milk on top of a multiplicative factor:
// F*x + gamma * (bin mean DIM - d0) * x / (bin mean partial yield).
double dim_adjusted_prediction(const FittedModel& m,
                               const PartialObservation& obs,
                               const BinMoments& moments, const BinRef& bin);

struct DimAdjustedMcf {
    double factor = 0.0;    // 1 / (alpha + beta*mid + gamma*(mean dim - d0))
    double bias_term = 0.0; // unadjusted-ratio bias gamma*(mean dim - d0)/mean x
};

// DIM-adjusted factor for a proportion-model fit, with the bias the
// unadjusted factor would carry reported alongside.
DimAdjustedMcf dim_adjusted_mcf(const FittedModel& m, Session s,
                                const BinMoments& moments, const BinRef& bin);

} // namespace ampm
