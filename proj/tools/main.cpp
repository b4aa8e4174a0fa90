// Command-line front end: simulate synthetic herds, fit daily-yield models,
// derive correction-factor tables, predict, and run the replicated benchmark.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ampm/bench_eval.hpp"
#include "ampm/correction_factors.hpp"
#include "ampm/curve_sim.hpp"
#include "ampm/errors.hpp"
#include "ampm/io.hpp"
#include "ampm/yield_models.hpp"

namespace {

using namespace ampm;

std::string valid_model_names() {
    std::string s;
    for (ModelId id : all_model_ids()) {
        if (!s.empty())
            s += ", ";
        s += model_name(id);
    }
    return s;
}

std::vector<ModelId> parse_model_list(const std::string& arg) {
    if (arg == "all")
        return all_model_ids();
    std::vector<ModelId> ids;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
        std::size_t next = arg.find(',', pos);
        std::string name = arg.substr(
            pos, next == std::string::npos ? std::string::npos : next - pos);
        auto id = parse_model_id(name);
        if (!id)
            throw UsageError("unknown model '" + name + "' (valid: all, " +
                             valid_model_names() + ")");
        ids.push_back(*id);
        if (next == std::string::npos)
            break;
        pos = next + 1;
    }
    if (ids.empty())
        throw UsageError("no models requested");
    return ids;
}

int cmd_simulate(const SimConfig& cfg, const std::string& out_path) {
    MilkingDataset ds = simulate_herd(cfg);
    write_records_csv_file(out_path, ds);
    std::fprintf(stderr, "wrote %zu records to %s\n", ds.records.size(),
                 out_path.c_str());
    return 0;
}

int cmd_fit(const std::string& model_arg, const std::string& data_path,
            const std::string& grid_spec, const std::string& out_path,
            bool use_dim, bool m5_origin_slope) {
    auto id = parse_model_id(model_arg);
    if (!id)
        throw UsageError("unknown model '" + model_arg + "' (valid: " +
                         valid_model_names() + ")");
    MilkingDataset data = read_records_csv_file(data_path);
    IntervalGrid grid = parse_grid_spec(grid_spec);
    FitOptions opt;
    opt.use_dim = use_dim;
    opt.m5_origin_slope = m5_origin_slope;
    FittedModel m = fit_model(*id, data, grid, opt);
    save_model_file(out_path, m);
    std::fprintf(stderr, "fitted %s on %zu records -> %s\n", model_name(*id),
                 data.records.size(), out_path.c_str());
    return 0;
}

int cmd_factors(const std::string& model_path, const std::string& out_path,
                const std::string& grid_spec, const std::string& data_path,
                const std::string& kind_arg) {
    FittedModel m = load_model_file(model_path);
    IntervalGrid grid = grid_spec.empty() ? m.grid : parse_grid_spec(grid_spec);

    bool additive_model =
        m.id == ModelId::M1 || m.id == ModelId::M2B || m.id == ModelId::M3B;
    bool multiplicative_model =
        m.id == ModelId::M4 || m.id == ModelId::M5 || m.id == ModelId::M6B ||
        m.id == ModelId::M7B;
    if (!additive_model && !multiplicative_model)
        throw UsageError(std::string("model ") + model_name(m.id) +
                         " predicts directly and has no factor table; fit the "
                         "B variant instead");
    if (!kind_arg.empty()) {
        if (kind_arg == "additive" && !additive_model)
            throw UsageError(std::string("model ") + model_name(m.id) +
                             " is multiplicative; additive factors are not defined");
        if (kind_arg == "multiplicative" && !multiplicative_model)
            throw UsageError(std::string("model ") + model_name(m.id) +
                             " is additive; multiplicative factors are not defined");
    }

    FactorTable table;
    if (additive_model) {
        table = acf_table(m, grid);
    } else {
        BinMoments moments = m.moments;
        if (!data_path.empty())
            moments = class_stats(read_records_csv_file(data_path), grid);
        else if (!(grid == m.grid))
            throw UsageError("deriving factors on a new grid needs --data to "
                             "recompute the per-bin moments");
        table = mcf_table(m, grid, moments);
    }

    int borrowed = 0;
    for (std::uint8_t b : table.borrowed)
        borrowed += b;
    if (borrowed > 0)
        std::fprintf(stderr,
                     "warning: %d factor(s) borrowed from neighboring bins "
                     "(thin interval classes)\n",
                     borrowed);

    write_factors_csv_file(out_path, table);
    std::fprintf(stderr, "wrote %d factors to %s\n",
                 2 * table.grid.bin_count(), out_path.c_str());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path, const std::string& mode_arg) {
    FittedModel m = load_model_file(model_path);
    MilkingDataset data = read_records_csv_file(data_path, /*require_daily=*/false);

    PredictMode mode;
    if (mode_arg == "direct")
        mode = PredictMode::Direct;
    else if (mode_arg == "factor")
        mode = PredictMode::Factor;
    else if (mode_arg.empty())
        mode = predicts_direct(m.id) ? PredictMode::Direct : PredictMode::Factor;
    else
        throw UsageError("--mode must be direct or factor");

    std::ofstream f(out_path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + out_path + "' for writing");
    f << "cow_id,session,interval_h,partial_kg,predicted_daily_kg\n";
    int clamped_bins = 0, clamped_neg = 0, borrowed = 0;
    for (const MilkingRecord& r : data.records) {
        PredictFlags flags;
        double yhat = predict_daily(m, observation_of(r), mode, &flags);
        clamped_bins += flags.clamped_bin;
        clamped_neg += flags.clamped_negative;
        borrowed += flags.borrowed_factor;
        f << r.cow_id << ',' << session_name(r.session) << ','
          << format_g6(r.interval_h) << ',' << format_g6(r.partial_kg) << ','
          << format_g6(yhat) << '\n';
    }
    if (!f)
        throw IoError("write failed for '" + out_path + "'");
    if (clamped_bins)
        std::fprintf(stderr, "warning: %d interval(s) outside the grid span were "
                             "clamped to edge bins\n", clamped_bins);
    if (borrowed)
        std::fprintf(stderr, "warning: %d prediction(s) used factors borrowed "
                             "from neighboring bins\n", borrowed);
    if (clamped_neg)
        std::fprintf(stderr, "warning: %d negative estimate(s) clamped to 0\n",
                     clamped_neg);
    std::fprintf(stderr, "wrote %zu predictions to %s\n", data.records.size(),
                 out_path.c_str());
    return 0;
}

std::string default_diag_path(const std::string& out_path) {
    std::string stem = out_path;
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv")
        stem = stem.substr(0, stem.size() - 4);
    return stem + "_diag.csv";
}

int cmd_benchmark(const std::string& data_path, const std::string& models_arg,
                  int replicates, std::size_t n_train, std::uint64_t seed,
                  const std::string& grid_spec, const std::string& out_path,
                  std::string diag_path, int threads, int folds) {
    MilkingDataset data = read_records_csv_file(data_path);
    std::vector<ModelId> ids = parse_model_list(models_arg);
    IntervalGrid grid = parse_grid_spec(grid_spec);

    std::size_t n_cows = 0;
    {
        std::vector<std::int64_t> seen;
        for (const MilkingRecord& r : data.records)
            seen.push_back(r.cow_id);
        std::sort(seen.begin(), seen.end());
        n_cows = std::unique(seen.begin(), seen.end()) - seen.begin();
    }

    SplitPlan plan = folds > 0 ? make_folds(n_cows, folds, seed)
                               : make_splits(n_cows, n_train, replicates, seed);
    BenchmarkReport report = run_benchmark(data, ids, plan, grid, threads);

    if (diag_path.empty())
        diag_path = default_diag_path(out_path);
    write_report_csv_file(out_path, report);
    write_diag_csv_file(diag_path, report);

    int failed = 0;
    for (const ModelResult& r : report.results) {
        if (!r.ok) {
            ++failed;
            std::fprintf(stderr, "model %s failed: %s\n", model_name(r.id),
                         r.error.c_str());
        }
    }
    if (failed == static_cast<int>(report.results.size()))
        throw Error("benchmark: every requested model failed");
    std::fprintf(stderr, "wrote report to %s and diagnostics to %s\n",
                 out_path.c_str(), diag_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Daily milk yield estimation from single AM/PM milkings: "
                 "simulation, model fitting, correction-factor tables, and "
                 "replicated benchmarks"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic herd CSV");
    ampm::SimConfig cfg;
    std::string sim_out;
    sim->add_option("--cows", cfg.n_cows, "Number of cows")->capture_default_str();
    sim->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    sim->add_option("--out", sim_out, "Output records CSV")->required();
    sim->add_option("--y720-mean", cfg.y720_mean)->capture_default_str();
    sim->add_option("--y720-sd", cfg.y720_sd)->capture_default_str();
    sim->add_option("--k-mean", cfg.k_mean)->capture_default_str();
    sim->add_option("--k-sd", cfg.k_sd)->capture_default_str();
    sim->add_option("--interval-mean", cfg.interval_mean)->capture_default_str();
    sim->add_option("--interval-sd", cfg.interval_sd)->capture_default_str();
    sim->add_option("--interval-lo", cfg.interval_lo)->capture_default_str();
    sim->add_option("--interval-hi", cfg.interval_hi)->capture_default_str();
    sim->add_option("--param-trunc-sds", cfg.param_trunc_sds,
                    "Curve-parameter truncation half-width in SD units")
        ->capture_default_str();
    sim->add_option("--noise-sd", cfg.noise_sd,
                    "Additive weighing error per milking, kg")
        ->capture_default_str();
    sim->add_option("--dim", cfg.dim_value, "Constant DIM value")->capture_default_str();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a model and write a model file");
    std::string fit_model_arg, fit_data, fit_grid = "8:16:0.5", fit_out;
    bool fit_use_dim = false, fit_m5_slope = false;
    fit->add_option("--model", fit_model_arg, "Model id (" + valid_model_names() + ")")
        ->required();
    fit->add_option("--data", fit_data, "Records CSV")->required();
    fit->add_option("--grid", fit_grid, "Interval grid LO:HI:WIDTH")->capture_default_str();
    fit->add_option("--out", fit_out, "Output model file")->required();
    fit->add_flag("--use-dim", fit_use_dim, "Fit a days-in-milk term (M3/M5/M6)");
    fit->add_flag("--m5-origin-slope", fit_m5_slope,
                  "M5 first stage: through-origin OLS slope instead of ratio of sums");

    // factors
    auto* fac = app.add_subcommand("factors", "Derive a correction-factor CSV");
    std::string fac_model, fac_out, fac_grid, fac_data, fac_kind;
    fac->add_option("--model", fac_model, "Model file from fit")->required();
    fac->add_option("--out", fac_out, "Output factors CSV")->required();
    fac->add_option("--grid", fac_grid, "Derive on a different grid LO:HI:WIDTH");
    fac->add_option("--data", fac_data, "Records CSV to recompute per-bin moments");
    fac->add_option("--kind", fac_kind, "additive or multiplicative (validated)")
        ->check(CLI::IsMember({"additive", "multiplicative"}));

    // predict
    auto* pre = app.add_subcommand("predict", "Estimate daily yields for records");
    std::string pre_model, pre_data, pre_out, pre_mode;
    pre->add_option("--model", pre_model, "Model file from fit")->required();
    pre->add_option("--data", pre_data, "Records CSV (daily_kg may be absent)")->required();
    pre->add_option("--out", pre_out, "Output predictions CSV")->required();
    pre->add_option("--mode", pre_mode, "direct or factor (default: by model)");

    // benchmark
    auto* ben = app.add_subcommand("benchmark",
                                   "Replicated train/test evaluation of models");
    std::string ben_data, ben_models = "all", ben_grid = "8:16:0.5", ben_out, ben_diag;
    int ben_reps = 30, ben_threads = 0, ben_folds = 0;
    std::size_t ben_train = 2000;
    std::uint64_t ben_seed = 7;
    ben->add_option("--data", ben_data, "Labeled records CSV")->required();
    ben->add_option("--models", ben_models, "all or comma-separated ids")
        ->capture_default_str();
    ben->add_option("--replicates", ben_reps, "Number of random splits")
        ->capture_default_str();
    ben->add_option("--train", ben_train, "Training cows per replicate")
        ->capture_default_str();
    ben->add_option("--seed", ben_seed, "Split seed")->capture_default_str();
    ben->add_option("--grid", ben_grid, "Interval grid LO:HI:WIDTH")
        ->capture_default_str();
    ben->add_option("--out", ben_out, "Output report CSV")->required();
    ben->add_option("--diag-out", ben_diag,
                    "Diagnostics CSV (default: <out>_diag.csv)");
    ben->add_option("--threads", ben_threads,
                    "Worker threads (0 = hardware)")->capture_default_str();
    ben->add_option("--folds", ben_folds,
                    "Use k-fold splits instead of random partitions");

    try {
        app.parse(argc, argv);

        if (sim->parsed())
            return cmd_simulate(cfg, sim_out);
        if (fit->parsed())
            return cmd_fit(fit_model_arg, fit_data, fit_grid, fit_out,
                           fit_use_dim, fit_m5_slope);
        if (fac->parsed())
            return cmd_factors(fac_model, fac_out, fac_grid, fac_data, fac_kind);
        if (pre->parsed())
            return cmd_predict(pre_model, pre_data, pre_out, pre_mode);
        if (ben->parsed())
            return cmd_benchmark(ben_data, ben_models, ben_reps, ben_train,
                                 ben_seed, ben_grid, ben_out, ben_diag,
                                 ben_threads, ben_folds);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ampm::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ampm::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
