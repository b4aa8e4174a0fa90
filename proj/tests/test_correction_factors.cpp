#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "ampm/correction_factors.hpp"
#include "ampm/curve_sim.hpp"
#include "ampm/errors.hpp"
#include "ampm/rng.hpp"
#include "ampm/yield_models.hpp"

using namespace ampm;

namespace {

const IntervalGrid kGrid{};

const MilkingDataset& default_herd() {
    static MilkingDataset ds = [] {
        SimConfig cfg;
        cfg.seed = 37;
        return simulate_herd(cfg);
    }();
    return ds;
}

const FittedModel& herd_fit(ModelId id) {
    static std::map<ModelId, FittedModel> cache;
    auto it = cache.find(id);
    if (it == cache.end())
        it = cache.emplace(id, fit_model(id, default_herd(), kGrid)).first;
    return it->second;
}

// Herd with a days-in-milk trend: DIM correlates with the AM interval and the
// daily yield carries an injected linear DIM effect.
MilkingDataset dim_trend_herd(double gamma_true, int n_cows, std::uint64_t seed) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.n_cows = n_cows;
    MilkingDataset ds = simulate_herd(cfg);
    for (std::size_t i = 0; i < ds.records.size(); i += 2) {
        Rng rng = Rng::substream(seed ^ 0xd1345u, i);
        double t_am = ds.records[i].interval_h;
        double d = 150.0 + 25.0 * (t_am - 12.0) + 60.0 * (rng.uniform() - 0.5);
        double shift = gamma_true * (d - 150.0);
        for (int j = 0; j < 2; ++j) {
            ds.records[i + j].dim = d;
            ds.records[i + j].daily_kg = *ds.records[i + j].daily_kg + shift;
        }
    }
    return ds;
}

} // namespace

TEST_CASE("table derivation rejects mismatched model kinds") {
    CHECK_THROWS_AS(acf_table(herd_fit(ModelId::M6B), kGrid), UsageError);
    CHECK_THROWS_AS(mcf_table(herd_fit(ModelId::M2B), kGrid,
                              herd_fit(ModelId::M2B).moments),
                    UsageError);
    CHECK_THROWS_AS(acf_table(herd_fit(ModelId::M1), IntervalGrid(9, 15, 0.5)),
                    UsageError); // class means exist only on the fitted grid
}

TEST_CASE("smoothed additive tables can be derived on other grids") {
    FactorTable t = acf_table(herd_fit(ModelId::M2B), IntervalGrid(9, 15, 1.0));
    CHECK(t.values.size() == 12);
    CHECK(t.b == 2.0);
}

TEST_CASE("additive factors vanish at the equal-interval point") {
    // The two bins straddling 12 h carry factors of opposite sign; their mean
    // is the factor at an exactly equal 12-12 split.
    for (ModelId id : {ModelId::M1, ModelId::M2B}) {
        FactorTable t = acf_table(herd_fit(id), kGrid);
        int below = kGrid.bin_of(11.9).index;
        int above = kGrid.bin_of(12.1).index;
        for (int s = 0; s < 2; ++s) {
            double at12 = 0.5 * (t.value_at(static_cast<Session>(s), below) +
                                 t.value_at(static_cast<Session>(s), above));
            CHECK(std::abs(at12) <= 0.15);
        }
    }
}

TEST_CASE("smoothed additive tables are exactly affine in the midpoints") {
    FactorTable t = acf_table(herd_fit(ModelId::M2B), kGrid);
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k + 2 < kGrid.bin_count(); ++k) {
            double second_diff = t.value_at(static_cast<Session>(s), k + 2) -
                                 2.0 * t.value_at(static_cast<Session>(s), k + 1) +
                                 t.value_at(static_cast<Session>(s), k);
            CHECK(std::abs(second_diff) <= 1e-9);
        }
    }
}

TEST_CASE("mean additive gap between the estimated-b and fixed-b tables") {
    FactorTable t2 = acf_table(herd_fit(ModelId::M2B), kGrid);
    FactorTable t3 = acf_table(herd_fit(ModelId::M3B), kGrid);
    double gap = 0.0;
    int n = 0;
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            gap += t3.value_at(static_cast<Session>(s), k) -
                   t2.value_at(static_cast<Session>(s), k);
            ++n;
        }
    gap /= n;
    CHECK(std::abs(gap - 0.701) <= 0.05);
}

TEST_CASE("AM+PM factor pairs cancel for fixed-b tables") {
    const BinMoments& moments = herd_fit(ModelId::M1).moments;

    FactorTable t1 = acf_table(herd_fit(ModelId::M1), kGrid);
    for (int k = 0; k < kGrid.bin_count(); ++k) {
        BinRef bin = kGrid.bin(k);
        if (t1.borrowed_at(Session::AM, k) ||
            t1.borrowed_at(Session::PM, kGrid.complement(bin).index))
            continue; // thin-class factors come from elsewhere
        CHECK(std::abs(pair_sum(t1, bin, moments)) <= 1e-9);
    }

    FactorTable t2 = acf_table(herd_fit(ModelId::M2B), kGrid);
    for (int k = 0; k < kGrid.bin_count(); ++k)
        CHECK(std::abs(pair_sum(t2, kGrid.bin(k), moments)) <= 1e-9);

    CHECK_THROWS_AS(pair_sum(mcf_table(herd_fit(ModelId::M6B), kGrid, moments),
                             kGrid.bin(4), moments),
                    UsageError);
}

TEST_CASE("estimated-b pair sums track the per-class daily mean") {
    const FittedModel& m3 = herd_fit(ModelId::M3B);
    FactorTable t3 = acf_table(m3, kGrid);
    double global = m3.alpha[0] + m3.alpha[1] + 24.0 * m3.beta;
    CHECK(std::abs(global - 1.398) <= 0.07);
    for (int k = 0; k < kGrid.bin_count(); ++k) {
        const BinMomentsEntry& e = m3.moments.at(Session::AM, k);
        if (e.n < 100)
            continue;
        double expected = (2.0 - m3.b) * e.mean_y;
        double sum = pair_sum(t3, kGrid.bin(k), m3.moments);
        CHECK(std::abs(sum - expected) <= 0.05 * std::abs(expected));
    }
}

TEST_CASE("complementary bulk ratios partition the day exactly") {
    const BinMoments& mom = herd_fit(ModelId::M1).moments;
    for (int k = 0; k < kGrid.bin_count(); ++k) {
        const BinMomentsEntry& am = mom.at(Session::AM, k);
        const BinMomentsEntry& pm =
            mom.at(Session::PM, kGrid.complement(kGrid.bin(k)).index);
        if (am.n == 0 || pm.n == 0)
            continue;
        double f_am = am.sum_y / am.sum_x;
        double f_pm = pm.sum_y / pm.sum_x;
        CHECK(std::abs(1.0 / f_am + 1.0 / f_pm - 1.0) <= 1e-9);
    }
}

TEST_CASE("complement factor identity") {
    CHECK(complement_mcf(2.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(complement_mcf(2.5) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(complement_mcf(1.0), DataError);
    CHECK_THROWS_AS(complement_mcf(0.5), DataError);
    for (double f = 1.01; f <= 10.0; f += 0.037)
        CHECK(complement_mcf(complement_mcf(f)) ==
              doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("multiplicative tables stay near 2 at the day's midpoint") {
    const BinMoments& mom = herd_fit(ModelId::M1).moments;
    int k12 = kGrid.bin_of(12.2).index;
    for (ModelId id : {ModelId::M4, ModelId::M5, ModelId::M6B, ModelId::M7B}) {
        FactorTable t = mcf_table(herd_fit(id), kGrid, mom);
        for (int s = 0; s < 2; ++s) {
            double f = t.value_at(static_cast<Session>(s), k12);
            CHECK(f >= 1.95);
            CHECK(f <= 2.05);
        }
    }
}

TEST_CASE("multiplicative tables agree pairwise within 2 percent mid-span") {
    const BinMoments& mom = herd_fit(ModelId::M1).moments;
    std::vector<FactorTable> tables;
    for (ModelId id : {ModelId::M4, ModelId::M5, ModelId::M6B, ModelId::M7B})
        tables.push_back(mcf_table(herd_fit(id), kGrid, mom));
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            double mid = kGrid.bin(k).midpoint;
            if (mid < 9.0 || mid > 14.0)
                continue;
            for (std::size_t a = 0; a < tables.size(); ++a) {
                for (std::size_t b = a + 1; b < tables.size(); ++b) {
                    double fa = tables[a].value_at(static_cast<Session>(s), k);
                    double fb = tables[b].value_at(static_cast<Session>(s), k);
                    CHECK(std::abs(fa - fb) / std::min(fa, fb) <= 0.02);
                }
            }
        }
    }
}

TEST_CASE("proportion-model factors decrease in the sampled interval") {
    const FittedModel& m6 = herd_fit(ModelId::M6B);
    REQUIRE(m6.beta > 0.0);
    FactorTable t = mcf_table(m6, kGrid, m6.moments);
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k + 1 < kGrid.bin_count(); ++k)
            CHECK(t.value_at(static_cast<Session>(s), k + 1) <
                  t.value_at(static_cast<Session>(s), k));
}

TEST_CASE("additive and multiplicative routes agree at the class means") {
    const FittedModel& m2 = herd_fit(ModelId::M2B);
    const FittedModel& m6 = herd_fit(ModelId::M6B);
    FactorTable t2 = acf_table(m2, kGrid);
    FactorTable t6 = mcf_table(m6, kGrid, m6.moments);
    double daily_mean = m6.moments.session_total(Session::AM).mean_y;
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            const BinMomentsEntry& e = m6.moments.at(static_cast<Session>(s), k);
            if (e.n < 30)
                continue;
            double additive = t2.value_at(static_cast<Session>(s), k) + 2.0 * e.mean_x;
            double multiplicative = t6.value_at(static_cast<Session>(s), k) * e.mean_x;
            CHECK(std::abs(additive - multiplicative) <= 0.02 * daily_mean);
        }
    }
}

TEST_CASE("first-order agreement of the two ratio definitions per class") {
    const MilkingDataset& ds = default_herd();
    const BinMoments& mom = herd_fit(ModelId::M1).moments;
    std::vector<double> ratio_sum(2 * kGrid.bin_count(), 0.0);
    std::vector<std::size_t> count(2 * kGrid.bin_count(), 0);
    for (const MilkingRecord& r : ds.records) {
        BinRef b = kGrid.bin_of(r.interval_h);
        std::size_t idx =
            static_cast<std::size_t>(session_index(r.session)) * kGrid.bin_count() +
            static_cast<std::size_t>(b.index);
        ratio_sum[idx] += *r.daily_kg / r.partial_kg;
        count[idx] += 1;
    }
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            std::size_t idx = static_cast<std::size_t>(s) * kGrid.bin_count() + k;
            const BinMomentsEntry& e = mom.at(static_cast<Session>(s), k);
            if (e.n < 30)
                continue;
            double mean_of_ratio = ratio_sum[idx] / static_cast<double>(count[idx]);
            double ratio_of_means = e.mean_y / e.mean_x;
            CHECK(std::abs(mean_of_ratio - ratio_of_means) / ratio_of_means <= 0.01);
        }
    }
}

TEST_CASE("log-model factor degenerates cleanly without dispersion") {
    FittedModel m;
    m.id = ModelId::M7B;
    m.grid = kGrid;
    m.alpha = {std::log(2.0), std::log(2.0)};
    m.beta = 0.01;
    m.b = 1.0;
    std::vector<BinMomentsEntry> entries(2 * kGrid.bin_count());
    for (auto& e : entries) {
        e.n = 50;
        e.mean_x = 11.0;
        e.mean_y = 22.0;
    }
    std::array<BinMomentsEntry, 2> totals{};
    for (auto& t : totals) {
        t.n = 800;
        t.mean_x = 11.0;
        t.mean_y = 22.0;
    }
    m.moments = BinMoments(kGrid, entries, totals);
    for (int k = 0; k < kGrid.bin_count(); ++k) {
        double mid = kGrid.bin(k).midpoint;
        CHECK(factor_value(m, Session::AM, kGrid.bin(k)) ==
              doctest::Approx(std::exp(std::log(2.0) + 0.01 * mid)).epsilon(1e-12));
    }
}

TEST_CASE("subset factors reduce to single-session values and to unity") {
    const FittedModel& m6 = herd_fit(ModelId::M6B);
    BinRef bin = kGrid.bin_of(11.2);

    double am_only = mcf_subset(m6, {Session::AM}, kGrid, bin);
    CHECK(am_only == doctest::Approx(factor_value(m6, Session::AM, bin)).epsilon(1e-12));

    double pm_only = mcf_subset(m6, {Session::PM}, kGrid, bin);
    CHECK(pm_only ==
          doctest::Approx(factor_value(m6, Session::PM, kGrid.complement(bin)))
              .epsilon(1e-12));

    double both = mcf_subset(m6, {Session::AM, Session::PM}, kGrid, bin);
    CHECK(std::abs(both - 1.0) <= 0.03);

    CHECK_THROWS_AS(mcf_subset(m6, {}, kGrid, bin), UsageError);
    CHECK_THROWS_AS(mcf_subset(m6, {Session::AM, Session::AM}, kGrid, bin),
                    UsageError);
    CHECK_THROWS_AS(mcf_subset(herd_fit(ModelId::M3B), {Session::AM}, kGrid, bin),
                    UsageError);
}

TEST_CASE("DIM-adjusted prediction reduces to the plain factor") {
    FittedModel m;
    m.id = ModelId::M6B;
    m.grid = kGrid;
    m.alpha = {0.5, 0.5};
    m.beta = 0.0;
    m.gamma = 0.0; // present but zero
    m.d0 = 150.0;
    std::vector<BinMomentsEntry> entries(2 * kGrid.bin_count());
    for (auto& e : entries) {
        e.n = 40;
        e.mean_x = 12.0;
        e.mean_y = 24.0;
        e.mean_dim = 170.0;
    }
    m.moments = BinMoments(kGrid, entries, {entries[0], entries[0]});

    PartialObservation obs{Session::AM, 11.2, 10.0, 170.0};
    BinRef bin = kGrid.bin_of(11.2);
    CHECK(dim_adjusted_prediction(m, obs, m.moments, bin) ==
          doctest::Approx(2.0 * 10.0).epsilon(1e-12));

    // nonzero gamma but the class mean DIM sits at d0
    m.gamma = -0.02;
    for (auto& e : entries)
        e.mean_dim = 150.0;
    m.moments = BinMoments(kGrid, entries, {entries[0], entries[0]});
    CHECK(dim_adjusted_prediction(m, obs, m.moments, bin) ==
          doctest::Approx(2.0 * 10.0).epsilon(1e-12));

    m.gamma.reset();
    CHECK_THROWS_AS(dim_adjusted_prediction(m, obs, m.moments, bin), UsageError);
}

TEST_CASE("DIM-adjusted prediction recovers an injected trend per class") {
    const double gamma_true = -0.02;
    MilkingDataset ds = dim_trend_herd(gamma_true, 5000, 21);
    FitOptions opt;
    opt.use_dim = true;
    FittedModel m = fit_model(ModelId::M5, ds, kGrid, opt);
    REQUIRE(m.gamma.has_value());
    CHECK(std::abs(*m.gamma - gamma_true) <= 0.1 * std::abs(gamma_true));

    FactorTable t = mcf_table(m, kGrid, m.moments);
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            const BinMomentsEntry& e = m.moments.at(static_cast<Session>(s), k);
            if (e.n < 100 || std::abs(e.mean_dim - m.d0) < 3.0)
                continue;
            PartialObservation obs{static_cast<Session>(s),
                                   kGrid.bin(k).midpoint, e.mean_x, e.mean_dim};
            double adjusted = dim_adjusted_prediction(m, obs, m.moments, kGrid.bin(k));
            double offset = adjusted - t.value_at(static_cast<Session>(s), k) * e.mean_x;
            double true_offset = gamma_true * (e.mean_dim - m.d0);
            CHECK(std::abs(offset - true_offset) <= 0.1 * std::abs(true_offset));
        }
    }
}

TEST_CASE("DIM-adjusted proportion factor opposes the reported bias") {
    MilkingDataset ds = dim_trend_herd(-0.02, 5000, 22);
    FitOptions opt;
    opt.use_dim = true;
    FittedModel m = fit_model(ModelId::M6B, ds, kGrid, opt);
    REQUIRE(m.gamma.has_value());
    int checked = 0;
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < kGrid.bin_count(); ++k) {
            const BinMomentsEntry& e = m.moments.at(static_cast<Session>(s), k);
            if (e.n < 100 || std::abs(e.mean_dim - m.d0) < 3.0)
                continue;
            BinRef bin = kGrid.bin(k);
            DimAdjustedMcf out =
                dim_adjusted_mcf(m, static_cast<Session>(s), m.moments, bin);
            double unadjusted = 1.0 / (m.alpha[s] + m.beta * bin.midpoint);
            CHECK(out.bias_term != 0.0);
            CHECK((out.factor - unadjusted) * out.bias_term < 0.0);
            ++checked;
        }
    }
    CHECK(checked > 4);

    // gamma == 0 and mean DIM at d0 both collapse to the plain factor
    FittedModel z = m;
    z.gamma = 0.0;
    BinRef bin = kGrid.bin_of(11.7);
    DimAdjustedMcf out = dim_adjusted_mcf(z, Session::AM, z.moments, bin);
    CHECK(out.factor ==
          doctest::Approx(1.0 / (z.alpha[0] + z.beta * bin.midpoint)).epsilon(1e-12));
    CHECK(out.bias_term == 0.0);
}
