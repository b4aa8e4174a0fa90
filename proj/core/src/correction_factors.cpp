#include "ampm/correction_factors.hpp"

#include <cmath>
#include <string>

#include "ampm/errors.hpp"

namespace ampm {

namespace {

std::size_t table_index(const IntervalGrid& grid, Session s, int bin) {
    if (bin < 0 || bin >= grid.bin_count())
        throw UsageError("factor table: bin index out of range");
    return static_cast<std::size_t>(session_index(s)) * grid.bin_count() +
           static_cast<std::size_t>(bin);
}

FactorTable derive(const FittedModel& m, const IntervalGrid& grid,
                   const BinMoments* moments, FactorTable::Kind kind) {
    FactorTable t;
    t.kind = kind;
    t.grid = grid;
    t.source_model = m.id;
    t.b = kind == FactorTable::Kind::Additive ? m.b : 0.0;
    t.values.resize(2 * static_cast<std::size_t>(grid.bin_count()));
    t.borrowed.assign(t.values.size(), 0);
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < grid.bin_count(); ++k) {
            bool borrowed = false;
            t.values[table_index(grid, static_cast<Session>(s), k)] =
                factor_value(m, static_cast<Session>(s), grid.bin(k), moments,
                             &borrowed);
            t.borrowed[table_index(grid, static_cast<Session>(s), k)] =
                borrowed ? 1 : 0;
        }
    }
    return t;
}

} // namespace

double FactorTable::value_at(Session s, int bin) const {
    return values[table_index(grid, s, bin)];
}

bool FactorTable::borrowed_at(Session s, int bin) const {
    return borrowed[table_index(grid, s, bin)] != 0;
}

FactorTable acf_table(const FittedModel& m, const IntervalGrid& grid) {
    if (!(m.id == ModelId::M1 || m.id == ModelId::M2B || m.id == ModelId::M3B))
        throw UsageError(std::string("acf_table: ") + model_name(m.id) +
                         " does not define additive factors");
    if (m.id == ModelId::M1 && !(grid == m.grid))
        throw UsageError("acf_table: M1 class means exist only on the fitted grid");
    return derive(m, grid, nullptr, FactorTable::Kind::Additive);
}

FactorTable mcf_table(const FittedModel& m, const IntervalGrid& grid,
                      const BinMoments& moments) {
    if (!(m.id == ModelId::M4 || m.id == ModelId::M5 || m.id == ModelId::M6B ||
          m.id == ModelId::M7B))
        throw UsageError(std::string("mcf_table: ") + model_name(m.id) +
                         " does not define multiplicative factors");
    if (!(moments.grid() == grid))
        throw UsageError("mcf_table: moments were computed on a different grid");
    return derive(m, grid, &moments, FactorTable::Kind::Multiplicative);
}

double pair_sum(const FactorTable& t, const BinRef& bin,
                const BinMoments& moments) {
    if (t.kind != FactorTable::Kind::Additive)
        throw UsageError("pair_sum: needs an additive table");
    if (!(moments.grid() == t.grid))
        throw UsageError("pair_sum: moments were computed on a different grid");
    BinRef comp = t.grid.complement(bin);
    return t.value_at(Session::AM, bin.index) +
           t.value_at(Session::PM, comp.index);
}

double complement_mcf(double f) {
    if (!(f > 1.0))
        throw DataError("complement_mcf: factor must exceed 1 (a single "
                        "milking is a strict subset of the day)");
    return f / (f - 1.0);
}

double mcf_subset(const FittedModel& m, const std::vector<Session>& subset,
                  const IntervalGrid& grid, const BinRef& bin) {
    if (!(m.id == ModelId::M6A || m.id == ModelId::M6B))
        throw UsageError("mcf_subset: needs a proportion-model fit (M6A/M6B)");
    if (subset.empty())
        throw UsageError("mcf_subset: empty milking subset");
    bool seen[2] = {false, false};
    double denom = 0.0;
    for (Session s : subset) {
        int si = session_index(s);
        if (seen[si])
            throw UsageError("mcf_subset: duplicate session in subset");
        seen[si] = true;
        double mid = s == Session::AM ? bin.midpoint
                                      : grid.complement(bin).midpoint;
        denom += m.alpha[si] + m.beta * mid;
        if (m.gamma) {
            const BinRef b = s == Session::AM ? bin : grid.complement(bin);
            denom += *m.gamma * (m.moments.at(s, b.index).mean_dim - m.d0);
        }
    }
    if (!(denom > 0.0))
        throw PoleError("mcf_subset: fitted proportion sum not positive");
    return 1.0 / denom;
}

double dim_adjusted_prediction(const FittedModel& m,
                               const PartialObservation& obs,
                               const BinMoments& moments, const BinRef& bin) {
    if (!m.gamma)
        throw UsageError("dim_adjusted_prediction: model has no DIM coefficient");
    const BinMomentsEntry& e = moments.at(obs.session, bin.index);
    if (e.n == 0 || !(e.mean_x > 0.0))
        throw DataError("dim_adjusted_prediction: bin has no positive mean "
                        "partial yield");
    double f = factor_value(m, obs.session, bin, &moments);
    // The pooled DIM coefficient; the per-bin slopes of the ratio model's
    // first stage are kept only as diagnostics (they are far noisier).
    return f * obs.partial_kg +
           *m.gamma * (e.mean_dim - m.d0) * obs.partial_kg / e.mean_x;
}

DimAdjustedMcf dim_adjusted_mcf(const FittedModel& m, Session s,
                                const BinMoments& moments, const BinRef& bin) {
    if (!(m.id == ModelId::M6A || m.id == ModelId::M6B))
        throw UsageError("dim_adjusted_mcf: needs a proportion-model fit");
    if (!m.gamma)
        throw UsageError("dim_adjusted_mcf: model has no DIM coefficient");
    const BinMomentsEntry& e = moments.at(s, bin.index);
    if (e.n == 0)
        throw DataError("dim_adjusted_mcf: bin has no records");
    double denom = m.alpha[session_index(s)] + m.beta * bin.midpoint +
                   *m.gamma * (e.mean_dim - m.d0);
    if (!(denom > 0.0))
        throw PoleError("dim_adjusted_mcf: adjusted proportion not positive at bin [" +
                        std::to_string(bin.lo) + ", " + std::to_string(bin.hi) + ")");
    DimAdjustedMcf out;
    out.factor = 1.0 / denom;
    out.bias_term = e.mean_x > 0.0 ? *m.gamma * (e.mean_dim - m.d0) / e.mean_x : 0.0;
    return out;
}

} // namespace ampm
