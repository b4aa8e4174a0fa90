#include "ampm/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ampm/errors.hpp"

namespace ampm {

namespace {

constexpr double kRankTol = 1e-10;

// Dense symmetric p x p solve; p is tiny here (<= a handful of columns).
class Cholesky {
public:
    // a is row-major p x p; throws SingularityError when a pivot collapses.
    Cholesky(std::vector<double> a, std::size_t p) : l_(std::move(a)), p_(p) {
        double max_diag = 0.0;
        for (std::size_t i = 0; i < p_; ++i)
            max_diag = std::max(max_diag, l_[i * p_ + i]);
        for (std::size_t j = 0; j < p_; ++j) {
            double d = l_[j * p_ + j];
            for (std::size_t k = 0; k < j; ++k)
                d -= l_[j * p_ + k] * l_[j * p_ + k];
            if (!(d > kRankTol * max_diag))
                throw SingularityError(
                    "ols_fit: design column " + std::to_string(j) +
                    " is collinear with earlier columns");
            d = std::sqrt(d);
            l_[j * p_ + j] = d;
            for (std::size_t i = j + 1; i < p_; ++i) {
                double s = l_[i * p_ + j];
                for (std::size_t k = 0; k < j; ++k)
                    s -= l_[i * p_ + k] * l_[j * p_ + k];
                l_[i * p_ + j] = s / d;
            }
        }
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (std::size_t i = 0; i < p_; ++i) {
            for (std::size_t k = 0; k < i; ++k)
                b[i] -= l_[i * p_ + k] * b[k];
            b[i] /= l_[i * p_ + i];
        }
        for (std::size_t ii = p_; ii-- > 0;) {
            for (std::size_t k = ii + 1; k < p_; ++k)
                b[ii] -= l_[k * p_ + ii] * b[k];
            b[ii] /= l_[ii * p_ + ii];
        }
        return b;
    }

    // (X'X)^-1, row-major.
    std::vector<double> inverse() const {
        std::vector<double> inv(p_ * p_, 0.0);
        for (std::size_t c = 0; c < p_; ++c) {
            std::vector<double> e(p_, 0.0);
            e[c] = 1.0;
            std::vector<double> col = solve(std::move(e));
            for (std::size_t r = 0; r < p_; ++r)
                inv[r * p_ + c] = col[r];
        }
        return inv;
    }

private:
    std::vector<double> l_;
    std::size_t p_;
};

} // namespace

CoefEstimates ols_fit(std::span<const DesignRow> rows, const OlsSpec& spec) {
    if (rows.empty())
        throw DataError("ols_fit: no rows");
    const std::size_t p = rows.front().regressors.size();
    if (p == 0)
        throw DataError("ols_fit: empty design");
    const std::size_t n = rows.size();
    if (n <= p)
        throw DataError("ols_fit: need more rows than regressors");
    for (const auto& r : rows)
        if (r.regressors.size() != p)
            throw UsageError("ols_fit: ragged design rows");
    if (!spec.center.empty() && spec.n_intercepts == 0)
        throw UsageError("ols_fit: centering requires intercept columns");
    for (std::size_t c : spec.center)
        if (c < spec.n_intercepts || c >= p)
            throw UsageError("ols_fit: bad centering column");

    std::vector<double> mean(p, 0.0);
    for (std::size_t c : spec.center) {
        double s = 0.0;
        for (const auto& r : rows)
            s += r.regressors[c];
        mean[c] = s / static_cast<double>(n);
    }
    std::vector<bool> centered(p, false);
    for (std::size_t c : spec.center)
        centered[c] = true;

    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0), x(p);
    double yty = 0.0;
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < p; ++j)
            x[j] = centered[j] ? r.regressors[j] - mean[j] : r.regressors[j];
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = i; j < p; ++j)
                xtx[i * p + j] += x[i] * x[j];
            xty[i] += x[i] * r.response;
        }
        yty += r.response * r.response;
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j)
            xtx[i * p + j] = xtx[j * p + i];

    Cholesky chol(xtx, p);
    std::vector<double> theta = chol.solve(xty);

    double ssr = yty;
    for (std::size_t i = 0; i < p; ++i)
        ssr -= theta[i] * xty[i];
    ssr = std::max(ssr, 0.0);
    double sigma2 = ssr / static_cast<double>(n - p);

    std::vector<double> inv = chol.inverse();

    // Map back to the uncentered parameterization: the shift lands on the
    // intercept columns (they partition the rows, so they absorb constants).
    double shift = 0.0;
    for (std::size_t c : spec.center)
        shift += mean[c] * theta[c];
    for (std::size_t i = 0; i < spec.n_intercepts; ++i)
        theta[i] -= shift;

    CoefEstimates out;
    out.coefficients = theta;
    out.residual_variance = sigma2;
    out.n = n;
    out.standard_errors.resize(p);
    // var(alpha_i - sum m_c theta_c) via the linear map on the covariance.
    for (std::size_t i = 0; i < p; ++i) {
        double v;
        if (i < spec.n_intercepts) {
            v = inv[i * p + i];
            for (std::size_t c : spec.center) {
                v -= 2.0 * mean[c] * inv[i * p + c];
                for (std::size_t d : spec.center)
                    v += mean[c] * mean[d] * inv[c * p + d];
            }
        } else {
            v = inv[i * p + i];
        }
        out.standard_errors[i] = std::sqrt(std::max(v, 0.0) * sigma2);
    }
    return out;
}

double origin_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw UsageError("origin_fit: length mismatch");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    if (!(sxx > 0.0))
        throw DataError("origin_fit: sum of squares of x is zero");
    return sxy / sxx;
}

double ratio_of_sums(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw UsageError("ratio_of_sums: length mismatch");
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    if (!(sx > 0.0))
        throw DataError("ratio_of_sums: sum of x must be > 0");
    return sy / sx;
}

} // namespace ampm
