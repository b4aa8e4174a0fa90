#include <benchmark/benchmark.h>

#include "ampm/bench_eval.hpp"
#include "ampm/correction_factors.hpp"
#include "ampm/curve_sim.hpp"
#include "ampm/yield_models.hpp"

using namespace ampm;

namespace {

MilkingDataset herd(int n_cows) {
    SimConfig cfg;
    cfg.n_cows = n_cows;
    cfg.seed = 97;
    return simulate_herd(cfg);
}

void SimulateHerd(benchmark::State& state) {
    SimConfig cfg;
    cfg.n_cows = static_cast<int>(state.range(0));
    cfg.seed = 97;
    for (auto _ : state) {
        MilkingDataset ds = simulate_herd(cfg);
        benchmark::DoNotOptimize(ds.records.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(SimulateHerd)->Arg(1000)->Arg(3000)->Arg(10000);

void FitJointRegression(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    for (auto _ : state) {
        FittedModel m = fit_model(ModelId::M3A, ds, grid);
        benchmark::DoNotOptimize(m.beta);
    }
}
BENCHMARK(FitJointRegression);

void FitLogRegression(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    for (auto _ : state) {
        FittedModel m = fit_model(ModelId::M7A, ds, grid);
        benchmark::DoNotOptimize(m.b);
    }
}
BENCHMARK(FitLogRegression);

void FitBinnedRatios(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    for (auto _ : state) {
        FittedModel m = fit_model(ModelId::M5, ds, grid);
        benchmark::DoNotOptimize(m.recip_line[0][0]);
    }
}
BENCHMARK(FitBinnedRatios);

void PredictDirect(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    FittedModel m = fit_model(ModelId::M7A, ds, grid);
    std::size_t i = 0;
    for (auto _ : state) {
        const MilkingRecord& r = ds.records[i++ % ds.records.size()];
        benchmark::DoNotOptimize(
            predict_daily(m, observation_of(r), PredictMode::Direct));
    }
}
BENCHMARK(PredictDirect);

void PredictThroughTable(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    FittedModel m = fit_model(ModelId::M6B, ds, grid);
    std::size_t i = 0;
    for (auto _ : state) {
        const MilkingRecord& r = ds.records[i++ % ds.records.size()];
        benchmark::DoNotOptimize(
            predict_daily(m, observation_of(r), PredictMode::Factor));
    }
}
BENCHMARK(PredictThroughTable);

void FullBenchmark(benchmark::State& state) {
    MilkingDataset ds = herd(3000);
    IntervalGrid grid;
    SplitPlan plan = make_splits(3000, 2000, static_cast<int>(state.range(0)), 7);
    for (auto _ : state) {
        BenchmarkReport rep = run_benchmark(ds, all_model_ids(), plan, grid);
        benchmark::DoNotOptimize(rep.sigma2);
    }
}
BENCHMARK(FullBenchmark)->Arg(5)->Arg(30)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
