#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ampm/interval_grid.hpp"
#include "ampm/least_squares.hpp"
#include "ampm/records.hpp"

namespace ampm {

// The model catalog. A-suffix models predict directly from coefficients;
// B-suffix models (and M1, M4, M5) predict through per-bin factor tables.
//
//   M1      per-bin class means of (y - 2x), additive
//   M2A/B   OLS of (y - 2x) on session intercepts + interval, b fixed at 2
//   M3A/B   OLS of y on session intercepts + interval + x (+ DIM on request)
//   M4      per-bin proportions sum(x)/sum(y) smoothed by a per-session
//           quadratic in the bin midpoint, multiplicative
//   M5      per-bin ratios sum(y)/sum(x), reciprocals smoothed by a
//           per-session line in the bin midpoint, multiplicative
//   M6A/B   OLS of x/y on session intercepts + a common interval slope
//   M7A/B   OLS of log y on session intercepts + interval + log x
enum class ModelId {
    M1, M2A, M2B, M3A, M3B, M4, M5, M6A, M6B, M7A, M7B
};

const std::vector<ModelId>& all_model_ids();
const char* model_name(ModelId id);
std::optional<ModelId> parse_model_id(const std::string& name);

// Direct prediction is defined for the A-suffix models only.
bool predicts_direct(ModelId id);
// Everything that derives a per-bin table (B-suffix plus M1, M4, M5).
bool predicts_by_factor(ModelId id);
// Additive family (M1, M2*, M3*); the rest are multiplicative.
bool is_additive_family(ModelId id);

// Per (session, bin) sample statistics of the training data. Variances use
// population denominators.
struct BinMomentsEntry {
    std::size_t n = 0;
    double mean_x = 0.0, var_x = 0.0; // single-milking yield
    double mean_y = 0.0, var_y = 0.0; // daily yield
    double mean_dim = 0.0;
    double sum_x = 0.0, sum_y = 0.0;  // bulk yields per bin
};

class BinMoments {
public:
    BinMoments() = default;
    BinMoments(IntervalGrid grid, std::vector<BinMomentsEntry> entries,
               std::array<BinMomentsEntry, 2> session_totals);

    const IntervalGrid& grid() const { return grid_; }
    const BinMomentsEntry& at(Session s, int bin) const;
    const BinMomentsEntry& session_total(Session s) const {
        return session_totals_[static_cast<int>(s)];
    }
    std::size_t total_count() const;
    std::vector<int> empty_bins(Session s) const; // flagged n == 0 bins

private:
    IntervalGrid grid_;
    std::vector<BinMomentsEntry> entries_; // 2 * bin_count, AM block first
    std::array<BinMomentsEntry, 2> session_totals_{};
};

// Exact two-pass moments. Every record must carry daily_kg.
BinMoments class_stats(const MilkingDataset& data, const IntervalGrid& grid);

struct FitOptions {
    // Fit a DIM term (supported for M3, M5, M6) when records carry dim.
    bool use_dim = false;
    // M5 first stage: through-origin OLS slope instead of ratio of sums.
    bool m5_origin_slope = false;
};

struct FittedModel {
    ModelId id = ModelId::M1;
    IntervalGrid grid;
    BinMoments moments; // training-data class stats

    // Joint-regression coefficients (scale depends on the family: yield for
    // M2/M3, proportion for M6, log scale for M7).
    std::array<double, 2> alpha{0.0, 0.0};
    double beta = 0.0;
    double b = 0.0;               // partial-yield coefficient; exactly 2 for M1/M2
    std::optional<double> gamma;  // common DIM coefficient
    double d0 = 0.0;              // DIM centering constant

    std::array<double, 2> alpha_se{0.0, 0.0};
    double beta_se = 0.0, b_se = 0.0, gamma_se = 0.0;
    double residual_variance = 0.0;

    // M1: per-bin class means of (y - 2x); thin bins (n < 5) borrow the
    // nearest populated bin and are flagged; NaN when no donor exists.
    std::vector<double> class_delta;
    std::vector<std::uint8_t> class_borrowed;

    // M4: per-session quadratic for the per-bin proportion sum(x)/sum(y).
    std::array<std::array<double, 3>, 2> prop_quad{};

    // M5: per-session line for the reciprocal of the per-bin ratio, plus the
    // raw per-bin ratios (NaN for empty bins) and per-bin DIM slopes.
    std::array<std::array<double, 2>, 2> recip_line{};
    std::vector<double> bin_ratio;
    std::vector<double> bin_gamma;
};

FittedModel fit_model(ModelId id, const MilkingDataset& data,
                      const IntervalGrid& grid, const FitOptions& options = {});

enum class PredictMode { Direct, Factor };

struct PredictFlags {
    bool clamped_bin = false;      // interval outside the grid span
    bool clamped_negative = false; // negative estimate clamped to 0
    bool borrowed_factor = false;  // factor came from a neighboring bin
};

// Estimated daily yield for one observed milking. Direct mode requires an
// A-suffix id; factor mode a table-capable id.
double predict_daily(const FittedModel& m, const PartialObservation& obs,
                     PredictMode mode, PredictFlags* flags = nullptr);

// One factor-table entry: the additive amount (M1/M2B/M3B) or multiplicative
// ratio (M4/M5/M6B/M7B) for a bin. Moments may be overridden so tables can be
// derived on a different grid than the fit used; defaults to the training
// moments.
double factor_value(const FittedModel& m, Session s, const BinRef& bin,
                    const BinMoments* moments = nullptr,
                    bool* borrowed = nullptr);

// Second-order mean-ratio correction for the log-scale model's factors,
// exp((v(y)/mean(y)^2 - b v(x)/mean(x)^2) / 2), from the bin's moments; thin
// bins (n < 5) fall back to session-wide moments.
double mean_ratio_correction(const BinMoments& moments, Session s, int bin,
                             double b);

} // namespace ampm
