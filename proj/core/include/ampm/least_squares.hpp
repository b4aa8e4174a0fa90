#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ampm {

struct DesignRow {
    std::vector<double> regressors;
    double response = 0.0;
};

struct CoefEstimates {
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    double residual_variance = 0.0; // unbiased, SSR / (n - p)
    std::size_t n = 0;
};

// Fitting controls. The first n_intercepts columns are taken to be indicator
// columns that partition the rows (each row has exactly one of them set);
// columns listed in center are mean-centered before solving and the
// coefficients and covariance are mapped back afterwards, which keeps the
// normal equations well conditioned without changing the reported model.
struct OlsSpec {
    std::size_t n_intercepts = 0;
    std::vector<std::size_t> center;
};

// Ordinary least squares via the normal equations (Cholesky, rank tolerance
// 1e-10 relative to the largest diagonal). Throws SingularityError naming the
// first collinear column, DataError when n <= p.
CoefEstimates ols_fit(std::span<const DesignRow> rows, const OlsSpec& spec = {});

// Through-origin OLS slope sum(xy) / sum(x^2).
double origin_fit(std::span<const double> xs, std::span<const double> ys);

// sum(y) / sum(x); equals mean(y)/mean(x) for equal-length inputs.
double ratio_of_sums(std::span<const double> xs, std::span<const double> ys);

} // namespace ampm
