#pragma once

// Type II censored likelihood. A life test on n units stops at the r-th
// failure, so the data are the order statistics x_(1) <= ... <= x_(r) and
//
//   L(theta) = n!/(n-r)! * prod_i f(x_(i)) * [1 - F(x_(r))]^(n-r).
//
// The factorial ratio does not depend on theta. log_likelihood includes it by
// default; the "kernel" drops it.

#include "ewd/distribution.hpp"
#include "ewd/error.hpp"
#include "ewd/numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ewd {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

inline Vector3 as_vector(const Theta& theta) { return {theta.alpha, theta.beta, theta.sigma}; }
inline Theta as_theta(const Vector3& v) { return {v[0], v[1], v[2]}; }

/// First r order statistics out of n_total lifetimes.
class CensoredSample {
public:
    CensoredSample(std::vector<double> observed, std::size_t n_total)
        : observed_(std::move(observed)), n_total_(n_total)
    {
        if (observed_.empty()) {
            throw invalid_parameter("a censored sample needs at least one observed failure");
        }
        if (n_total_ < observed_.size()) {
            throw invalid_parameter("n_total (" + std::to_string(n_total_) +
                                    ") is smaller than the number of observed failures (" +
                                    std::to_string(observed_.size()) + ")");
        }
        for (std::size_t i = 0; i < observed_.size(); ++i) {
            const double x = observed_[i];
            if (!(x > 0.0) || std::isinf(x)) {
                throw invalid_parameter("observed lifetimes must be positive and finite");
            }
            if (i > 0 && x < observed_[i - 1]) {
                throw invalid_parameter("observed order statistics must be nondecreasing");
            }
        }
    }

    /// Complete (uncensored) sample; values are sorted here.
    static CensoredSample complete(std::vector<double> values)
    {
        std::stable_sort(values.begin(), values.end());
        const std::size_t n = values.size();
        return CensoredSample(std::move(values), n);
    }

    std::span<const double> observed() const noexcept { return observed_; }
    std::size_t r() const noexcept { return observed_.size(); }
    std::size_t n_total() const noexcept { return n_total_; }
    std::size_t n_censored() const noexcept { return n_total_ - observed_.size(); }
    double largest_observed() const noexcept { return observed_.back(); }
    bool is_complete() const noexcept { return n_total_ == observed_.size(); }

    /// Keep only the first r_new order statistics (r_new <= r).
    CensoredSample truncated(std::size_t r_new) const
    {
        if (r_new < 1 || r_new > r()) {
            throw invalid_parameter("truncation must keep between 1 and r observations");
        }
        return CensoredSample(std::vector<double>(observed_.begin(),
                                                  observed_.begin() + static_cast<long>(r_new)),
                              n_total_);
    }

    /// y_i = x_i^beta. Order is preserved because beta > 0.
    CensoredSample powered(double beta) const
    {
        detail::require_positive(beta, "beta");
        std::vector<double> y(observed_.size());
        std::transform(observed_.begin(), observed_.end(), y.begin(),
                       [beta](double x) { return std::pow(x, beta); });
        return CensoredSample(std::move(y), n_total_);
    }

    /// Every lifetime multiplied by factor > 0.
    CensoredSample scaled(double factor) const
    {
        detail::require_positive(factor, "factor");
        std::vector<double> y(observed_.size());
        std::transform(observed_.begin(), observed_.end(), y.begin(),
                       [factor](double x) { return x * factor; });
        return CensoredSample(std::move(y), n_total_);
    }

    friend bool operator==(const CensoredSample&, const CensoredSample&) = default;

private:
    std::vector<double> observed_;
    std::size_t n_total_;
};

/// log(n! / (n - r)!).
inline double log_permutation_constant(std::size_t n, std::size_t r)
{
    if (r > n) {
        throw invalid_parameter("r must not exceed n");
    }
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(n - r) + 1.0);
}

enum class LikelihoodConstant { include, exclude };

/// Censored log-likelihood. Returns -inf when a density term or the survival
/// term underflows beyond recovery, so optimizers can back off instead of
/// handling an exception.
inline double log_likelihood(const CensoredSample& sample, const Theta& theta,
                             LikelihoodConstant constant = LikelihoodConstant::include)
{
    validate(theta);
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    CompensatedSum sum;
    for (double x : sample.observed()) {
        const double lp = detail::log_pdf_from_terms(detail::tail_terms(x, theta), theta);
        if (!std::isfinite(lp)) {
            return neg_inf;
        }
        sum += lp;
    }
    if (sample.n_censored() > 0) {
        const double ls = detail::tail_terms(sample.largest_observed(), theta).log_surv;
        if (!std::isfinite(ls)) {
            return neg_inf;
        }
        sum += static_cast<double>(sample.n_censored()) * ls;
    }
    if (constant == LikelihoodConstant::include) {
        sum += log_permutation_constant(sample.n_total(), sample.r());
    }
    return sum.value();
}

inline double log_likelihood_kernel(const CensoredSample& sample, const Theta& theta)
{
    return log_likelihood(sample, theta, LikelihoodConstant::exclude);
}

/// EED log-likelihood of (already transformed) data y at (alpha, lambda).
inline double eed_log_likelihood(const CensoredSample& y, const EedTheta& theta,
                                 LikelihoodConstant constant = LikelihoodConstant::include)
{
    return log_likelihood(y, from_eed(theta), constant);
}

/// Gradient of log_likelihood in (alpha, beta, sigma):
///   sum_i f'(x_i)/f(x_i) - (n - r) F'(x_r) / (1 - F(x_r)).
inline Vector3 score(const CensoredSample& sample, const Theta& theta)
{
    validate(theta);
    std::array<CompensatedSum, 3> acc;
    for (double x : sample.observed()) {
        const auto c = score_components(x, theta);
        for (int k = 0; k < 3; ++k) {
            acc[k] += c.log_density[k];
        }
    }
    if (sample.n_censored() > 0) {
        const auto c = score_components(sample.largest_observed(), theta);
        const double m = static_cast<double>(sample.n_censored());
        for (int k = 0; k < 3; ++k) {
            acc[k] += -m * c.cdf_over_surv[k];
        }
    }
    return {acc[0].value(), acc[1].value(), acc[2].value()};
}

struct HessianResult {
    Matrix3 matrix = Matrix3::Zero();
    /// ||H - H^T|| / ||H|| before symmetrization.
    double asymmetry = 0.0;
    bool ill_conditioned = false;
};

/// Central-difference Jacobian of the analytic score, symmetrized. Step per
/// coordinate: max(1e-5 |theta_k|, 1e-8).
inline HessianResult numerical_hessian(const CensoredSample& sample, const Theta& theta)
{
    validate(theta);
    const Vector3 center = as_vector(theta);
    Matrix3 raw;
    for (int k = 0; k < 3; ++k) {
        const double h = std::max(1e-5 * std::abs(center[k]), 1e-8);
        Vector3 up = center;
        Vector3 down = center;
        up[k] += h;
        down[k] -= h;
        if (!(down[k] > 0.0)) {
            throw domain_error("theta too close to the boundary for a central difference");
        }
        raw.col(k) = (score(sample, as_theta(up)) - score(sample, as_theta(down))) / (2.0 * h);
    }
    HessianResult out;
    const double norm = raw.norm();
    out.asymmetry = norm > 0.0 ? (raw - raw.transpose()).norm() / norm : 0.0;
    out.ill_conditioned = out.asymmetry > 1e-3;
    out.matrix = 0.5 * (raw + raw.transpose());
    return out;
}

} // namespace ewd
