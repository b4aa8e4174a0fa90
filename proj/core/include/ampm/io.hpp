#pragma once

#include <iosfwd>
#include <string>

#include "ampm/bench_eval.hpp"
#include "ampm/correction_factors.hpp"
#include "ampm/records.hpp"
#include "ampm/yield_models.hpp"

namespace ampm {

// CSV numeric formatting: 6 significant digits. Reading a file written this
// way and re-emitting it reproduces the bytes.
std::string format_g6(double v);

// Shortest exact representation; model files round-trip coefficients
// bit-for-bit.
std::string format_exact(double v);

// Records CSV: header cow_id,session,interval_h,partial_kg,daily_kg,dim.
// Missing daily_kg / dim are written as empty fields. Readers tolerate a
// missing dim column entirely; daily_kg is required unless require_daily is
// false (prediction inputs). Parse errors name the 1-based line.
void write_records_csv(std::ostream& out, const MilkingDataset& data);
void write_records_csv_file(const std::string& path, const MilkingDataset& data);
MilkingDataset read_records_csv_file(const std::string& path,
                                     bool require_daily = true);

// Versioned structured-text model file.
void save_model_file(const std::string& path, const FittedModel& m);
FittedModel load_model_file(const std::string& path);

// Factors CSV: session,bin_lo,bin_mid,bin_hi,kind,value (the plot data for
// factor curves).
void write_factors_csv_file(const std::string& path, const FactorTable& table);

// Benchmark report CSV: model,variance,bias_sq,mse,accuracy,status; companion
// diagnostics CSV with per-session fit lines and parameter summaries.
void write_report_csv_file(const std::string& path, const BenchmarkReport& report);
void write_diag_csv_file(const std::string& path, const BenchmarkReport& report);

} // namespace ampm
