#include "ampm/yield_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ampm/errors.hpp"

namespace ampm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bins thinner than this borrow factors / fall back to session moments.
constexpr std::size_t kMinBinCount = 5;

struct Family {
    bool m1, m2, m3, m4, m5, m6, m7;
};

Family family_of(ModelId id) {
    switch (id) {
    case ModelId::M1: return {true, false, false, false, false, false, false};
    case ModelId::M2A:
    case ModelId::M2B: return {false, true, false, false, false, false, false};
    case ModelId::M3A:
    case ModelId::M3B: return {false, false, true, false, false, false, false};
    case ModelId::M4: return {false, false, false, true, false, false, false};
    case ModelId::M5: return {false, false, false, false, true, false, false};
    case ModelId::M6A:
    case ModelId::M6B: return {false, false, false, false, false, true, false};
    case ModelId::M7A:
    case ModelId::M7B: return {false, false, false, false, false, false, true};
    }
    throw UsageError("unknown model id");
}

} // namespace

const std::vector<ModelId>& all_model_ids() {
    static const std::vector<ModelId> ids = {
        ModelId::M1, ModelId::M2A, ModelId::M2B, ModelId::M3A, ModelId::M3B,
        ModelId::M4, ModelId::M5, ModelId::M6A, ModelId::M6B, ModelId::M7A,
        ModelId::M7B};
    return ids;
}

const char* model_name(ModelId id) {
    switch (id) {
    case ModelId::M1: return "M1";
    case ModelId::M2A: return "M2A";
    case ModelId::M2B: return "M2B";
    case ModelId::M3A: return "M3A";
    case ModelId::M3B: return "M3B";
    case ModelId::M4: return "M4";
    case ModelId::M5: return "M5";
    case ModelId::M6A: return "M6A";
    case ModelId::M6B: return "M6B";
    case ModelId::M7A: return "M7A";
    case ModelId::M7B: return "M7B";
    }
    return "?";
}

std::optional<ModelId> parse_model_id(const std::string& name) {
    for (ModelId id : all_model_ids())
        if (name == model_name(id))
            return id;
    return std::nullopt;
}

bool predicts_direct(ModelId id) {
    return id == ModelId::M2A || id == ModelId::M3A || id == ModelId::M6A ||
           id == ModelId::M7A;
}

bool predicts_by_factor(ModelId id) { return !predicts_direct(id); }

bool is_additive_family(ModelId id) {
    const Family f = family_of(id);
    return f.m1 || f.m2 || f.m3;
}

BinMoments::BinMoments(IntervalGrid grid, std::vector<BinMomentsEntry> entries,
                       std::array<BinMomentsEntry, 2> session_totals)
    : grid_(grid), entries_(std::move(entries)),
      session_totals_(session_totals) {}

const BinMomentsEntry& BinMoments::at(Session s, int bin) const {
    std::size_t idx =
        static_cast<std::size_t>(session_index(s)) * grid_.bin_count() +
        static_cast<std::size_t>(bin);
    if (bin < 0 || bin >= grid_.bin_count() || idx >= entries_.size())
        throw UsageError("BinMoments: bin index out of range");
    return entries_[idx];
}

std::size_t BinMoments::total_count() const {
    return session_totals_[0].n + session_totals_[1].n;
}

std::vector<int> BinMoments::empty_bins(Session s) const {
    std::vector<int> out;
    for (int k = 0; k < grid_.bin_count(); ++k)
        if (at(s, k).n == 0)
            out.push_back(k);
    return out;
}

BinMoments class_stats(const MilkingDataset& data, const IntervalGrid& grid) {
    if (data.records.empty())
        throw DataError("class_stats: empty dataset");

    const int nbins = grid.bin_count();
    std::vector<BinMomentsEntry> e(2 * static_cast<std::size_t>(nbins));
    std::array<BinMomentsEntry, 2> totals{};

    auto slot = [&](const MilkingRecord& r) -> BinMomentsEntry& {
        BinRef b = grid.bin_of(r.interval_h);
        return e[static_cast<std::size_t>(session_index(r.session)) * nbins +
                 static_cast<std::size_t>(b.index)];
    };

    // Pass 1: counts and sums.
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const MilkingRecord& r = data.records[i];
        if (!r.daily_kg)
            throw DataError("class_stats: record " + std::to_string(i) +
                            " has no daily yield");
        BinMomentsEntry& s = slot(r);
        s.n += 1;
        s.sum_x += r.partial_kg;
        s.sum_y += *r.daily_kg;
        s.mean_dim += r.dim.value_or(0.0);
        BinMomentsEntry& t = totals[session_index(r.session)];
        t.n += 1;
        t.sum_x += r.partial_kg;
        t.sum_y += *r.daily_kg;
        t.mean_dim += r.dim.value_or(0.0);
    }
    auto finish_means = [](BinMomentsEntry& s) {
        if (s.n == 0)
            return;
        double n = static_cast<double>(s.n);
        s.mean_x = s.sum_x / n;
        s.mean_y = s.sum_y / n;
        s.mean_dim = s.mean_dim / n;
    };
    for (auto& s : e)
        finish_means(s);
    for (auto& s : totals)
        finish_means(s);

    // Pass 2: population variances around the exact means.
    for (const MilkingRecord& r : data.records) {
        BinMomentsEntry& s = slot(r);
        double dx = r.partial_kg - s.mean_x;
        double dy = *r.daily_kg - s.mean_y;
        s.var_x += dx * dx;
        s.var_y += dy * dy;
        BinMomentsEntry& t = totals[session_index(r.session)];
        dx = r.partial_kg - t.mean_x;
        dy = *r.daily_kg - t.mean_y;
        t.var_x += dx * dx;
        t.var_y += dy * dy;
    }
    auto finish_vars = [](BinMomentsEntry& s) {
        if (s.n == 0)
            return;
        double n = static_cast<double>(s.n);
        s.var_x /= n;
        s.var_y /= n;
    };
    for (auto& s : e)
        finish_vars(s);
    for (auto& s : totals)
        finish_vars(s);

    return BinMoments(grid, std::move(e), totals);
}

double mean_ratio_correction(const BinMoments& moments, Session s, int bin,
                             double b) {
    const BinMomentsEntry* m = &moments.at(s, bin);
    if (m->n < kMinBinCount || !(m->mean_x > 0.0) || !(m->mean_y > 0.0))
        m = &moments.session_total(s);
    if (m->n == 0 || !(m->mean_x > 0.0) || !(m->mean_y > 0.0))
        return 1.0;
    return std::exp(0.5 * (m->var_y / (m->mean_y * m->mean_y) -
                           b * m->var_x / (m->mean_x * m->mean_x)));
}

namespace {

double require_daily(const MilkingRecord& r, std::size_t i) {
    if (!r.daily_kg)
        throw DataError("fit_model: record " + std::to_string(i) +
                        " has no daily yield");
    return *r.daily_kg;
}

double mean_dim_or_throw(const MilkingDataset& data) {
    double sum = 0.0;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        if (!data.records[i].dim)
            throw DataError("fit_model: DIM requested but record " +
                            std::to_string(i) + " has no dim");
        sum += *data.records[i].dim;
    }
    return sum / static_cast<double>(data.records.size());
}

void store_joint_fit(FittedModel& m, const CoefEstimates& est, bool has_b,
                     bool has_gamma) {
    m.alpha = {est.coefficients[0], est.coefficients[1]};
    m.alpha_se = {est.standard_errors[0], est.standard_errors[1]};
    m.beta = est.coefficients[2];
    m.beta_se = est.standard_errors[2];
    std::size_t next = 3;
    if (has_b) {
        m.b = est.coefficients[next];
        m.b_se = est.standard_errors[next];
        ++next;
    }
    if (has_gamma) {
        m.gamma = est.coefficients[next];
        m.gamma_se = est.standard_errors[next];
    }
    m.residual_variance = est.residual_variance;
}

// Weighted least squares on per-bin aggregate points: rows and responses are
// scaled by sqrt(weight) so bulk ratios carry their record counts.
CoefEstimates wls_points(const std::vector<double>& t,
                         const std::vector<double>& v,
                         const std::vector<double>& w, bool quadratic) {
    std::vector<DesignRow> rows(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        double sw = std::sqrt(w[i]);
        rows[i].regressors = quadratic
                                 ? std::vector<double>{sw, sw * t[i], sw * t[i] * t[i]}
                                 : std::vector<double>{sw, sw * t[i]};
        rows[i].response = sw * v[i];
    }
    return ols_fit(rows, {});
}

} // namespace

FittedModel fit_model(ModelId id, const MilkingDataset& data,
                      const IntervalGrid& grid, const FitOptions& options) {
    const Family fam = family_of(id);
    if (options.use_dim && !(fam.m3 || fam.m5 || fam.m6))
        throw UsageError(std::string("fit_model: DIM term is not available for ") +
                         model_name(id));

    FittedModel m;
    m.id = id;
    m.grid = grid;
    m.moments = class_stats(data, grid); // also validates daily_kg presence

    const int nbins = grid.bin_count();
    const std::size_t n = data.records.size();
    const bool use_dim = options.use_dim;
    if (use_dim)
        m.d0 = mean_dim_or_throw(data);

    if (fam.m1) {
        m.b = 2.0;
        m.class_delta.assign(2 * static_cast<std::size_t>(nbins), kNaN);
        m.class_borrowed.assign(2 * static_cast<std::size_t>(nbins), 0);
        for (int s = 0; s < 2; ++s) {
            std::vector<int> donors;
            for (int k = 0; k < nbins; ++k)
                if (m.moments.at(static_cast<Session>(s), k).n >= kMinBinCount)
                    donors.push_back(k);
            for (int k = 0; k < nbins; ++k) {
                std::size_t idx = static_cast<std::size_t>(s) * nbins + k;
                const BinMomentsEntry& e = m.moments.at(static_cast<Session>(s), k);
                if (e.n >= kMinBinCount) {
                    m.class_delta[idx] = e.mean_y - 2.0 * e.mean_x;
                    continue;
                }
                m.class_borrowed[idx] = 1;
                if (donors.empty())
                    continue; // stays NaN; table derivation reports it
                int best = donors.front();
                for (int d : donors)
                    if (std::abs(d - k) < std::abs(best - k))
                        best = d;
                const BinMomentsEntry& de = m.moments.at(static_cast<Session>(s), best);
                m.class_delta[idx] = de.mean_y - 2.0 * de.mean_x;
            }
        }
        return m;
    }

    if (fam.m2 || fam.m3) {
        const bool has_b = fam.m3;
        std::vector<DesignRow> rows(n);
        for (std::size_t i = 0; i < n; ++i) {
            const MilkingRecord& r = data.records[i];
            double y = require_daily(r, i);
            auto& reg = rows[i].regressors;
            reg = {r.session == Session::AM ? 1.0 : 0.0,
                   r.session == Session::PM ? 1.0 : 0.0, r.interval_h};
            if (has_b)
                reg.push_back(r.partial_kg);
            if (use_dim)
                reg.push_back(*r.dim - m.d0);
            rows[i].response = has_b ? y : y - 2.0 * r.partial_kg;
        }
        OlsSpec spec;
        spec.n_intercepts = 2;
        spec.center = {2};
        if (has_b)
            spec.center.push_back(3);
        CoefEstimates est = ols_fit(rows, spec);
        store_joint_fit(m, est, has_b, use_dim && fam.m3);
        if (fam.m2)
            m.b = 2.0;
        return m;
    }

    if (fam.m4) {
        for (int s = 0; s < 2; ++s) {
            std::vector<double> t, v, w;
            for (int k = 0; k < nbins; ++k) {
                const BinMomentsEntry& e = m.moments.at(static_cast<Session>(s), k);
                if (e.n == 0)
                    continue;
                if (!(e.sum_y > 0.0))
                    throw DataError("fit_model: M4 bin with nonpositive bulk daily yield");
                t.push_back(grid.bin(k).midpoint);
                v.push_back(e.sum_x / e.sum_y);
                w.push_back(static_cast<double>(e.n));
            }
            CoefEstimates est = wls_points(t, v, w, /*quadratic=*/true);
            m.prop_quad[s] = {est.coefficients[0], est.coefficients[1],
                              est.coefficients[2]};
        }
        return m;
    }

    if (fam.m5) {
        m.bin_ratio.assign(2 * static_cast<std::size_t>(nbins), kNaN);
        m.bin_gamma.assign(2 * static_cast<std::size_t>(nbins), kNaN);
        // Stage 1: per-bin slope of daily on partial yield.
        std::vector<std::vector<double>> xs(2 * nbins), ys(2 * nbins), ds(2 * nbins);
        for (std::size_t i = 0; i < n; ++i) {
            const MilkingRecord& r = data.records[i];
            double y = require_daily(r, i);
            BinRef bin = grid.bin_of(r.interval_h);
            std::size_t idx =
                static_cast<std::size_t>(session_index(r.session)) * nbins +
                bin.index;
            xs[idx].push_back(r.partial_kg);
            ys[idx].push_back(y);
            if (use_dim)
                ds[idx].push_back(*r.dim - m.d0);
        }
        double gamma_wsum = 0.0, gamma_w = 0.0;
        for (std::size_t idx = 0; idx < xs.size(); ++idx) {
            if (xs[idx].empty())
                continue;
            if (use_dim && xs[idx].size() >= kMinBinCount) {
                std::vector<DesignRow> rows(xs[idx].size());
                for (std::size_t i = 0; i < xs[idx].size(); ++i) {
                    rows[i].regressors = {xs[idx][i], ds[idx][i]};
                    rows[i].response = ys[idx][i];
                }
                CoefEstimates est = ols_fit(rows, {});
                m.bin_ratio[idx] = est.coefficients[0];
                m.bin_gamma[idx] = est.coefficients[1];
                gamma_wsum += est.coefficients[1] * static_cast<double>(xs[idx].size());
                gamma_w += static_cast<double>(xs[idx].size());
            } else if (options.m5_origin_slope) {
                m.bin_ratio[idx] = origin_fit(xs[idx], ys[idx]);
            } else {
                m.bin_ratio[idx] = ratio_of_sums(xs[idx], ys[idx]);
            }
        }
        if (use_dim && gamma_w > 0.0)
            m.gamma = gamma_wsum / gamma_w;
        // Stage 2: per-session line through the reciprocal ratios.
        for (int s = 0; s < 2; ++s) {
            std::vector<double> t, v, w;
            for (int k = 0; k < nbins; ++k) {
                std::size_t idx = static_cast<std::size_t>(s) * nbins + k;
                if (std::isnan(m.bin_ratio[idx]))
                    continue;
                if (!(m.bin_ratio[idx] > 0.0))
                    throw DataError("fit_model: M5 bin ratio not positive");
                t.push_back(grid.bin(k).midpoint);
                v.push_back(1.0 / m.bin_ratio[idx]);
                w.push_back(static_cast<double>(xs[static_cast<std::size_t>(s) * nbins + k].size()));
            }
            CoefEstimates est = wls_points(t, v, w, /*quadratic=*/false);
            m.recip_line[s] = {est.coefficients[0], est.coefficients[1]};
        }
        return m;
    }

    if (fam.m6) {
        std::vector<DesignRow> rows(n);
        for (std::size_t i = 0; i < n; ++i) {
            const MilkingRecord& r = data.records[i];
            double y = require_daily(r, i);
            if (!(y > 0.0))
                throw DataError("fit_model: record " + std::to_string(i) +
                                " has nonpositive daily yield");
            rows[i].regressors = {r.session == Session::AM ? 1.0 : 0.0,
                                  r.session == Session::PM ? 1.0 : 0.0,
                                  r.interval_h};
            if (use_dim)
                rows[i].regressors.push_back(*r.dim - m.d0);
            rows[i].response = r.partial_kg / y;
        }
        OlsSpec spec;
        spec.n_intercepts = 2;
        spec.center = {2};
        CoefEstimates est = ols_fit(rows, spec);
        store_joint_fit(m, est, /*has_b=*/false, use_dim);
        return m;
    }

    // M7: log-scale regression; requires strictly positive yields.
    {
        std::string bad;
        int bad_count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const MilkingRecord& r = data.records[i];
            double y = require_daily(r, i);
            if (!(r.partial_kg > 0.0) || !(y > 0.0)) {
                ++bad_count;
                if (bad_count <= 5)
                    bad += (bad.empty() ? "" : ", ") + std::to_string(i);
            }
        }
        if (bad_count > 0)
            throw DataError("fit_model: log model needs positive yields; " +
                            std::to_string(bad_count) +
                            " offending records (indices " + bad + ")");

        std::vector<DesignRow> rows(n);
        for (std::size_t i = 0; i < n; ++i) {
            const MilkingRecord& r = data.records[i];
            rows[i].regressors = {r.session == Session::AM ? 1.0 : 0.0,
                                  r.session == Session::PM ? 1.0 : 0.0,
                                  r.interval_h, std::log(r.partial_kg)};
            rows[i].response = std::log(*r.daily_kg);
        }
        OlsSpec spec;
        spec.n_intercepts = 2;
        spec.center = {2, 3};
        CoefEstimates est = ols_fit(rows, spec);
        store_joint_fit(m, est, /*has_b=*/true, false);
        return m;
    }
}

namespace {

double checked_reciprocal(double prop, ModelId id, Session s, const BinRef& bin) {
    if (!(prop > 0.0))
        throw PoleError(std::string(model_name(id)) +
                        ": fitted denominator is not positive at " +
                        session_name(s) + " bin [" + std::to_string(bin.lo) +
                        ", " + std::to_string(bin.hi) + ")");
    if (!(prop < 1.0))
        throw PoleError(std::string(model_name(id)) +
                        ": fitted proportion reaches 1 at " + session_name(s) +
                        " bin [" + std::to_string(bin.lo) + ", " +
                        std::to_string(bin.hi) + ")");
    return 1.0 / prop;
}

} // namespace

double factor_value(const FittedModel& m, Session s, const BinRef& bin,
                    const BinMoments* moments, bool* borrowed) {
    if (borrowed)
        *borrowed = false;
    const int si = session_index(s);
    switch (m.id) {
    case ModelId::M1: {
        std::size_t idx = static_cast<std::size_t>(si) * m.grid.bin_count() +
                          static_cast<std::size_t>(bin.index);
        if (bin.index < 0 || idx >= m.class_delta.size())
            throw UsageError("factor_value: bin is not on the fitted grid");
        double v = m.class_delta[idx];
        if (std::isnan(v))
            throw MissingFactorError(
                "M1: no populated interval class to derive a factor for " +
                std::string(session_name(s)) + " bin [" +
                std::to_string(bin.lo) + ", " + std::to_string(bin.hi) + ")");
        if (borrowed)
            *borrowed = m.class_borrowed[idx] != 0;
        return v;
    }
    case ModelId::M2B:
    case ModelId::M3B:
        return m.alpha[si] + m.beta * bin.midpoint;
    case ModelId::M4: {
        const auto& q = m.prop_quad[si];
        double prop = q[0] + q[1] * bin.midpoint + q[2] * bin.midpoint * bin.midpoint;
        return checked_reciprocal(prop, m.id, s, bin);
    }
    case ModelId::M5: {
        const auto& l = m.recip_line[si];
        double prop = l[0] + l[1] * bin.midpoint;
        return checked_reciprocal(prop, m.id, s, bin);
    }
    case ModelId::M6B: {
        double prop = m.alpha[si] + m.beta * bin.midpoint;
        return checked_reciprocal(prop, m.id, s, bin);
    }
    case ModelId::M7B: {
        const BinMoments& mom = moments ? *moments : m.moments;
        const BinMomentsEntry& e = mom.at(s, bin.index);
        double xbar;
        if (e.n >= 5 && e.mean_x > 0.0) {
            xbar = e.mean_x;
        } else {
            xbar = mom.session_total(s).mean_x;
            if (borrowed)
                *borrowed = true;
        }
        if (!(xbar > 0.0))
            throw MissingFactorError("M7B: no positive mean partial yield for " +
                                     std::string(session_name(s)));
        double rho = mean_ratio_correction(mom, s, bin.index, m.b);
        double f = rho * std::pow(xbar, m.b - 1.0) *
                   std::exp(m.alpha[si] + m.beta * bin.midpoint);
        if (!(f > 0.0))
            throw PoleError("M7B: factor not positive at bin [" +
                            std::to_string(bin.lo) + ", " +
                            std::to_string(bin.hi) + ")");
        return f;
    }
    default:
        throw UsageError(std::string("factor_value: ") + model_name(m.id) +
                         " does not define per-bin factors");
    }
}

double predict_daily(const FittedModel& m, const PartialObservation& obs,
                     PredictMode mode, PredictFlags* flags) {
    if (flags)
        *flags = PredictFlags{};
    const int si = session_index(obs.session);
    double yhat;

    if (mode == PredictMode::Direct) {
        if (!predicts_direct(m.id))
            throw UsageError(std::string("predict_daily: ") + model_name(m.id) +
                             " has no direct prediction; use factor mode");
        double dim_term = 0.0;
        if (m.gamma && obs.dim)
            dim_term = *m.gamma * (*obs.dim - m.d0);
        switch (m.id) {
        case ModelId::M2A:
            yhat = m.alpha[si] + m.beta * obs.interval_h + 2.0 * obs.partial_kg;
            break;
        case ModelId::M3A:
            yhat = m.alpha[si] + m.beta * obs.interval_h + dim_term +
                   m.b * obs.partial_kg;
            break;
        case ModelId::M6A: {
            double prop = m.alpha[si] + m.beta * obs.interval_h + dim_term;
            if (!(prop > 0.0))
                throw PoleError("M6A: fitted proportion not positive at t=" +
                                std::to_string(obs.interval_h));
            yhat = obs.partial_kg / prop;
            break;
        }
        case ModelId::M7A:
            if (!(obs.partial_kg > 0.0))
                throw DataError("M7A: partial yield must be > 0");
            yhat = std::pow(obs.partial_kg, m.b) *
                   std::exp(m.alpha[si] + m.beta * obs.interval_h);
            break;
        default:
            throw UsageError("predict_daily: unexpected direct model");
        }
    } else {
        if (!predicts_by_factor(m.id))
            throw UsageError(std::string("predict_daily: ") + model_name(m.id) +
                             " predicts directly; use direct mode");
        bool clamped = false;
        BinRef bin = m.grid.bin_of(obs.interval_h, &clamped);
        if (flags)
            flags->clamped_bin = clamped;
        bool borrowed = false;
        double v = factor_value(m, obs.session, bin, nullptr, &borrowed);
        if (flags)
            flags->borrowed_factor = borrowed;
        yhat = is_additive_family(m.id) ? v + m.b * obs.partial_kg
                                        : v * obs.partial_kg;
    }

    if (yhat < 0.0) {
        if (flags)
            flags->clamped_negative = true;
        yhat = 0.0;
    }
    return yhat;
}

} // namespace ampm
