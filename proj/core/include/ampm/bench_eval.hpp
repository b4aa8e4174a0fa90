#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ampm/interval_grid.hpp"
#include "ampm/records.hpp"
#include "ampm/yield_models.hpp"

namespace ampm {

// Replicated train/test partitions over cows; a cow's AM and PM records
// always travel together.
struct SplitPlan {
    std::size_t n_cows = 0;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint8_t>> in_train; // [replicate][cow index]

    int replicates() const { return static_cast<int>(in_train.size()); }
};

// m independent uniform random partitions, deterministic under seed.
SplitPlan make_splits(std::size_t n_cows, std::size_t n_train, int replicates,
                      std::uint64_t seed);

// k-fold alternative: one shuffle, each fold used once as the test set.
SplitPlan make_folds(std::size_t n_cows, int k, std::uint64_t seed);

struct Metrics {
    double mse = 0.0;         // averaged over records and replicates
    double variance = 0.0;    // mean across-replicate variance of a record's
                              // prediction, weighted by appearances
    double bias_sq = 0.0;     // mse - variance
    double r2_accuracy = 0.0; // sigma2/(sigma2+mse) averaged over replicates
    double sigma2 = 0.0;      // variance of true daily yield, pooled test records
};

// Predictions one replicate produced for its test records, identified by
// indices into a shared record list.
struct ReplicatePredictions {
    std::vector<std::size_t> record_index;
    std::vector<double> prediction;
};

Metrics compute_metrics(std::span<const ReplicatePredictions> reps,
                        std::span<const double> truths);

// Per-session regression of true on estimated daily yield.
struct DiagLine {
    double intercept = 0.0;
    double slope = 0.0;
    double correlation = 0.0;
};

std::array<DiagLine, 2> regression_diagnostics(std::span<const double> truths,
                                               std::span<const double> predictions,
                                               std::span<const Session> sessions);

struct ParamStat {
    bool present = false;
    double mean = 0.0;
    double sd = 0.0; // across replicates
};

struct ParamSummary {
    ParamStat alpha_am, alpha_pm, beta, b, gamma;
};

struct ModelResult {
    ModelId id = ModelId::M1;
    bool ok = false;
    std::string error;
    Metrics metrics;
    std::array<DiagLine, 2> diag{}; // pooled over replicates, AM then PM
    ParamSummary params;
};

struct BenchmarkReport {
    std::vector<ModelResult> results; // ok models ordered by mse, failures last
    double sigma2 = 0.0;
    std::size_t n_cows = 0;
    std::size_t n_train = 0;
    int replicates = 0;
};

// Fits every requested model on each replicate's training cows and predicts
// the test records (directly for A-suffix models, through factor tables
// otherwise). Replicates are independent work units and may run on n_threads;
// results are reduced in replicate order, so the report is bit-identical
// regardless of thread count. A model that fails is flagged and the rest
// still run.
BenchmarkReport run_benchmark(const MilkingDataset& data,
                              const std::vector<ModelId>& ids,
                              const SplitPlan& plan, const IntervalGrid& grid,
                              int n_threads = 0);

} // namespace ampm
