#include "ampm/bench_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "ampm/errors.hpp"
#include "ampm/rng.hpp"

namespace ampm {

namespace {

std::vector<std::uint32_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t i = n; i-- > 1;) {
        std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

} // namespace

SplitPlan make_splits(std::size_t n_cows, std::size_t n_train, int replicates,
                      std::uint64_t seed) {
    if (n_train == 0 || n_train >= n_cows)
        throw UsageError("make_splits: need 0 < n_train < n_cows");
    if (replicates < 1)
        throw UsageError("make_splits: need at least one replicate");

    SplitPlan plan;
    plan.n_cows = n_cows;
    plan.n_train = n_train;
    plan.seed = seed;
    plan.in_train.resize(static_cast<std::size_t>(replicates));
    for (int r = 0; r < replicates; ++r) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(r));
        std::vector<std::uint32_t> perm = shuffled_indices(n_cows, rng);
        auto& mask = plan.in_train[static_cast<std::size_t>(r)];
        mask.assign(n_cows, 0);
        for (std::size_t i = 0; i < n_train; ++i)
            mask[perm[i]] = 1;
    }
    return plan;
}

SplitPlan make_folds(std::size_t n_cows, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n_cows)
        throw UsageError("make_folds: need 2 <= k <= n_cows");

    Rng rng = Rng::substream(seed, 0);
    std::vector<std::uint32_t> perm = shuffled_indices(n_cows, rng);

    SplitPlan plan;
    plan.n_cows = n_cows;
    plan.seed = seed;
    plan.in_train.resize(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        std::size_t lo = n_cows * static_cast<std::size_t>(f) / k;
        std::size_t hi = n_cows * static_cast<std::size_t>(f + 1) / k;
        auto& mask = plan.in_train[static_cast<std::size_t>(f)];
        mask.assign(n_cows, 1);
        for (std::size_t i = lo; i < hi; ++i)
            mask[perm[i]] = 0;
    }
    plan.n_train = n_cows - n_cows / static_cast<std::size_t>(k);
    return plan;
}

Metrics compute_metrics(std::span<const ReplicatePredictions> reps,
                        std::span<const double> truths) {
    if (reps.empty())
        throw UsageError("compute_metrics: no replicates");

    // Group predictions per record to decompose error into across-replicate
    // variance and squared deviation of the mean prediction.
    std::map<std::size_t, std::vector<double>> per_record;
    double sq_sum = 0.0;
    std::size_t total = 0;
    double truth_sum = 0.0, truth_sq = 0.0;
    std::vector<double> rep_mse;
    rep_mse.reserve(reps.size());

    for (const ReplicatePredictions& rep : reps) {
        if (rep.record_index.size() != rep.prediction.size())
            throw UsageError("compute_metrics: prediction/index length mismatch");
        if (rep.record_index.empty())
            throw UsageError("compute_metrics: replicate with no predictions");
        double se = 0.0;
        for (std::size_t i = 0; i < rep.record_index.size(); ++i) {
            std::size_t idx = rep.record_index[i];
            if (idx >= truths.size())
                throw UsageError("compute_metrics: record index out of range");
            double err = rep.prediction[i] - truths[idx];
            se += err * err;
            per_record[idx].push_back(rep.prediction[i]);
            truth_sum += truths[idx];
            truth_sq += truths[idx] * truths[idx];
        }
        sq_sum += se;
        total += rep.record_index.size();
        rep_mse.push_back(se / static_cast<double>(rep.record_index.size()));
    }

    Metrics m;
    m.mse = sq_sum / static_cast<double>(total);

    double var_sum = 0.0;
    for (const auto& [idx, preds] : per_record) {
        double n = static_cast<double>(preds.size());
        double mean = std::accumulate(preds.begin(), preds.end(), 0.0) / n;
        double v = 0.0;
        for (double p : preds)
            v += (p - mean) * (p - mean);
        var_sum += v; // n * population variance
    }
    m.variance = var_sum / static_cast<double>(total);
    m.bias_sq = m.mse - m.variance;

    double t_n = static_cast<double>(total);
    double t_mean = truth_sum / t_n;
    m.sigma2 = total > 1 ? (truth_sq - t_n * t_mean * t_mean) / (t_n - 1.0) : 0.0;

    double r2 = 0.0;
    for (double mse_r : rep_mse)
        r2 += m.sigma2 / (m.sigma2 + mse_r);
    m.r2_accuracy = r2 / static_cast<double>(rep_mse.size());
    return m;
}

std::array<DiagLine, 2> regression_diagnostics(std::span<const double> truths,
                                               std::span<const double> predictions,
                                               std::span<const Session> sessions) {
    if (truths.size() != predictions.size() || truths.size() != sessions.size())
        throw UsageError("regression_diagnostics: length mismatch");

    std::array<DiagLine, 2> out{};
    for (int s = 0; s < 2; ++s) {
        double n = 0.0, sp = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (session_index(sessions[i]) != s)
                continue;
            n += 1.0;
            sp += predictions[i];
            sy += truths[i];
        }
        if (n < 3.0)
            throw UsageError("regression_diagnostics: fewer than 3 points in a session");
        double mp = sp / n, my = sy / n;
        double spp = 0.0, syy = 0.0, spy = 0.0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (session_index(sessions[i]) != s)
                continue;
            double dp = predictions[i] - mp;
            double dy = truths[i] - my;
            spp += dp * dp;
            syy += dy * dy;
            spy += dp * dy;
        }
        if (!(spp > 0.0))
            throw DataError("regression_diagnostics: zero-variance predictions");
        DiagLine& d = out[s];
        d.slope = spy / spp;
        d.intercept = my - d.slope * mp;
        d.correlation = syy > 0.0 ? spy / std::sqrt(spp * syy) : 0.0;
    }
    return out;
}

namespace {

struct RepParams {
    bool has_ab = false, has_b = false, has_gamma = false;
    double alpha_am = 0.0, alpha_pm = 0.0, beta = 0.0, b = 0.0, gamma = 0.0;
};

RepParams snapshot_params(const FittedModel& m) {
    RepParams p;
    switch (m.id) {
    case ModelId::M2A:
    case ModelId::M2B:
    case ModelId::M3A:
    case ModelId::M3B:
    case ModelId::M6A:
    case ModelId::M6B:
    case ModelId::M7A:
    case ModelId::M7B:
        p.has_ab = true;
        p.alpha_am = m.alpha[0];
        p.alpha_pm = m.alpha[1];
        p.beta = m.beta;
        break;
    default:
        break; // M1/M4/M5 carry per-bin blocks, no joint coefficients
    }
    switch (m.id) {
    case ModelId::M2A:
    case ModelId::M2B:
    case ModelId::M3A:
    case ModelId::M3B:
    case ModelId::M7A:
    case ModelId::M7B:
        p.has_b = true;
        p.b = m.b;
        break;
    default:
        break;
    }
    if (m.gamma) {
        p.has_gamma = true;
        p.gamma = *m.gamma;
    }
    return p;
}

ParamStat stat_over(const std::vector<RepParams>& reps,
                    bool RepParams::*flag, double RepParams::*field) {
    ParamStat s;
    std::vector<double> vals;
    for (const RepParams& r : reps)
        if (r.*flag)
            vals.push_back(r.*field);
    if (vals.empty())
        return s;
    s.present = true;
    double n = static_cast<double>(vals.size());
    s.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
    if (vals.size() > 1) {
        double v = 0.0;
        for (double x : vals)
            v += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(v / (n - 1.0));
    }
    return s;
}

} // namespace

BenchmarkReport run_benchmark(const MilkingDataset& data,
                              const std::vector<ModelId>& ids,
                              const SplitPlan& plan, const IntervalGrid& grid,
                              int n_threads) {
    if (ids.empty())
        throw UsageError("run_benchmark: no models requested");

    // Cow ids -> dense indices, in first-appearance order.
    std::map<std::int64_t, std::size_t> cow_index;
    std::vector<std::size_t> record_cow(data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const MilkingRecord& r = data.records[i];
        if (!r.daily_kg)
            throw DataError("run_benchmark: record " + std::to_string(i) +
                            " has no daily yield");
        auto [it, inserted] = cow_index.try_emplace(r.cow_id, cow_index.size());
        record_cow[i] = it->second;
    }
    if (cow_index.size() != plan.n_cows)
        throw UsageError("run_benchmark: split plan is for " +
                         std::to_string(plan.n_cows) + " cows, data has " +
                         std::to_string(cow_index.size()));

    const int m_reps = plan.replicates();
    std::vector<double> truths(data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i)
        truths[i] = *data.records[i].daily_kg;

    // Shared per-replicate training datasets and test index lists.
    std::vector<MilkingDataset> train(m_reps);
    std::vector<std::vector<std::size_t>> test_idx(m_reps);
    for (int r = 0; r < m_reps; ++r) {
        const auto& mask = plan.in_train[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < data.records.size(); ++i) {
            if (mask[record_cow[i]])
                train[r].records.push_back(data.records[i]);
            else
                test_idx[r].push_back(i);
        }
    }

    unsigned hw = std::thread::hardware_concurrency();
    int threads = n_threads > 0 ? n_threads : static_cast<int>(hw ? hw : 1);
    threads = std::min<int>(threads, m_reps);

    BenchmarkReport report;
    report.n_cows = plan.n_cows;
    report.n_train = plan.n_train;
    report.replicates = m_reps;

    for (ModelId id : ids) {
        ModelResult res;
        res.id = id;

        std::vector<ReplicatePredictions> preds(m_reps);
        std::vector<RepParams> params(m_reps);
        std::vector<std::string> errors(m_reps);

        auto worker = [&](int lo, int hi) {
            for (int r = lo; r < hi; ++r) {
                try {
                    FittedModel fit = fit_model(id, train[r], grid);
                    params[r] = snapshot_params(fit);
                    PredictMode mode = predicts_direct(id) ? PredictMode::Direct
                                                           : PredictMode::Factor;
                    auto& out = preds[r];
                    out.record_index = test_idx[r];
                    out.prediction.reserve(test_idx[r].size());
                    for (std::size_t i : test_idx[r])
                        out.prediction.push_back(predict_daily(
                            fit, observation_of(data.records[i]), mode));
                } catch (const std::exception& e) {
                    errors[r] = e.what();
                }
            }
        };

        if (threads <= 1) {
            worker(0, m_reps);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) {
                int lo = m_reps * t / threads;
                int hi = m_reps * (t + 1) / threads;
                if (lo < hi)
                    pool.emplace_back(worker, lo, hi);
            }
            for (auto& th : pool)
                th.join();
        }

        auto first_error = std::find_if(errors.begin(), errors.end(),
                                        [](const std::string& e) { return !e.empty(); });
        if (first_error != errors.end()) {
            res.ok = false;
            res.error = *first_error;
            report.results.push_back(std::move(res));
            continue;
        }

        res.metrics = compute_metrics(preds, truths);

        // Pool every replicate's test predictions for the fit-line diagnostics.
        std::vector<double> all_t, all_p;
        std::vector<Session> all_s;
        for (int r = 0; r < m_reps; ++r) {
            for (std::size_t i = 0; i < preds[r].record_index.size(); ++i) {
                std::size_t idx = preds[r].record_index[i];
                all_t.push_back(truths[idx]);
                all_p.push_back(preds[r].prediction[i]);
                all_s.push_back(data.records[idx].session);
            }
        }
        res.diag = regression_diagnostics(all_t, all_p, all_s);

        res.params.alpha_am = stat_over(params, &RepParams::has_ab, &RepParams::alpha_am);
        res.params.alpha_pm = stat_over(params, &RepParams::has_ab, &RepParams::alpha_pm);
        res.params.beta = stat_over(params, &RepParams::has_ab, &RepParams::beta);
        res.params.b = stat_over(params, &RepParams::has_b, &RepParams::b);
        res.params.gamma = stat_over(params, &RepParams::has_gamma, &RepParams::gamma);

        res.ok = true;
        report.results.push_back(std::move(res));
    }

    std::stable_sort(report.results.begin(), report.results.end(),
                     [](const ModelResult& a, const ModelResult& b) {
                         if (a.ok != b.ok)
                             return a.ok;
                         if (!a.ok)
                             return false;
                         return a.metrics.mse < b.metrics.mse;
                     });

    for (const ModelResult& r : report.results) {
        if (r.ok) {
            report.sigma2 = r.metrics.sigma2;
            break;
        }
    }
    return report;
}

} // namespace ampm
