#pragma once

// Limiting Fisher information of the first r order statistics, r/n -> p.
//
// The information is a single integral of the log-hazard gradient against the
// density up to the p-quantile lambda_p:
//
//   I_p(theta) = int_0^{lambda_p} (d ln h)(d ln h)^T f(x) dx.
//
// Substituting z = 1 - exp(-(x/sigma)^beta) (so F = z^alpha and
// f dx = alpha z^(alpha-1) dz) gives, with
//   psi(z)  = 1 + ln(1-z) [1 + ((1-z)/z)(1 - alpha/(1-z^alpha))],
//   L(z)    = 1 + ln(-ln(1-z)) psi(z),
//   A(z)    = 1/alpha + ln z / (1 - z^alpha),
// the entries
//   I11 = (1/alpha^2) int_0^p [1 + ln x/(1-x)]^2 dx
//   I22 = (alpha/beta^2)      int_0^{p^(1/alpha)} L^2       z^(alpha-1) dz
//   I33 = alpha (beta/sigma)^2 int_0^{p^(1/alpha)} psi^2    z^(alpha-1) dz
//   I12 = (alpha/beta)        int_0^{p^(1/alpha)} A L       z^(alpha-1) dz
//   I13 = -(alpha beta/sigma) int_0^{p^(1/alpha)} A psi     z^(alpha-1) dz
//   I23 = -(alpha/sigma)      int_0^{p^(1/alpha)} L psi     z^(alpha-1) dz.
//
// The z-integrals are evaluated on the probability scale w = z^alpha in (0, p),
// where alpha z^(alpha-1) dz = dw; this removes the algebraic endpoint
// singularity for alpha < 1 and leaves only logarithmic ones, which the
// double-exponential (tanh-sinh) rule handles. The complement 1 - w is taken
// from the quadrature node directly so p = 1 loses no precision.

#include "ewd/distribution.hpp"
#include "ewd/error.hpp"
#include "ewd/likelihood.hpp"
#include "ewd/mle.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace ewd {

enum class Axis { alpha = 0, beta = 1, sigma = 2 };

/// (d/d alpha, d/d beta, d/d sigma) ln h(x; theta):
///   (1/alpha) [1 + ln F / (1 - F)]
///   (1/beta)  {1 + ln u [1 - u + (alpha-1) x f/(alpha beta F) + x f/(beta (1-F))]}
///   -(beta/sigma) [1 - u + (alpha-1) x f/(alpha beta F) + x f/(beta (1-F))]
/// with u = (x/sigma)^beta.
inline Vector3 log_hazard_partials(double x, const Theta& theta)
{
    validate(theta);
    detail::require_positive_x(x);
    const auto t = detail::tail_terms(x, theta);
    if (!std::isfinite(t.log_cdf) || !std::isfinite(t.log_surv) || t.log_cdf == 0.0) {
        throw numerical_error("F(x) is 0 or 1 at machine precision for x = " + std::to_string(x));
    }
    const double a = theta.alpha;
    const double b = theta.beta;
    const double log_pdf = detail::log_pdf_from_terms(t, theta);
    const double xf_over_b_surv = std::exp(std::log(x) + log_pdf - t.log_surv) / b;
    const double bracket = 1.0 - t.u + (a - 1.0) * u_over_expm1(t.u) + xf_over_b_surv;
    return {(1.0 + t.log_cdf * std::exp(-t.log_surv)) / a,
            (1.0 + t.log_u * bracket) / b,
            -(b / theta.sigma) * bracket};
}

struct QuadratureEstimate {
    double value = 0.0;
    double error = 0.0;
    double l1_norm = 0.0;
    std::size_t levels = 0;
    bool converged = false;
};

struct QuadratureOptions {
    double absolute_tolerance = 1e-9;
    double relative_tolerance = 1e-9;
    std::size_t max_refinements = 12; ///< 2^12 * ~7 nodes per side, well under 10^5 evaluations
};

namespace detail {

// Log-hazard gradient on the probability scale: g(w) with
//   g_alpha = A(z), g_beta = L(z)/beta, g_sigma = -(beta/sigma) psi(z),
// z = w^(1/alpha). `wc` is 1 - w carried exactly.
inline Vector3 probability_scale_gradient(double w, double wc, const Theta& theta)
{
    const double a = theta.alpha;
    const double lw = (w < 0.5) ? std::log(w) : std::log1p(-wc);
    const double lz = lw / a;
    const double z = std::exp(lz);
    const double one_minus_z = -std::expm1(lz);
    const double log_one_minus_z = (z < 0.5) ? std::log1p(-z) : std::log(one_minus_z);
    // ln(1-z)/z, finite as z -> 0.
    const double log1mz_over_z = (z < 1e-8) ? -1.0 - 0.5 * z : log_one_minus_z / z;
    const double psi_value = 1.0 + log1mz_over_z * (z + one_minus_z * (1.0 - a / wc));
    // ln(-ln(1-z)); for tiny z, -ln(1-z) = z (1 + z/2 + ...)
    const double log_u = (z < 1e-8) ? lz + 0.5 * z : std::log(-log_one_minus_z);
    const double l_value = 1.0 + log_u * psi_value;
    const double a_value = 1.0 / a + lz / wc;
    return {a_value, l_value / theta.beta, -(theta.beta / theta.sigma) * psi_value};
}

// Integrate g(w, 1 - w) over (0, p) with tanh-sinh on [-1, 1].
template <class G>
QuadratureEstimate integrate_probability(G&& g, double p, const QuadratureOptions& options)
{
    const double half = 0.5 * p;
    auto mapped = [&](double t, double tc) {
        // Boost passes tc = -1 - t near t = -1 and tc = 1 - t near t = +1.
        double w;
        double wc;
        if (t < -0.5) {
            w = half * (-tc);
            wc = 1.0 - w;
        } else if (t > 0.5) {
            w = p - half * tc;
            wc = (1.0 - p) + half * tc;
        } else {
            w = half * (1.0 + t);
            wc = 1.0 - w;
        }
        if (!(w > 0.0) || !(wc > 0.0)) {
            return 0.0;
        }
        return g(w, wc);
    };
    boost::math::quadrature::tanh_sinh<double> rule(options.max_refinements);
    QuadratureEstimate out;
    double error = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    const double tol = std::max(options.relative_tolerance, 1e-15);
    out.value = half * rule.integrate(mapped, tol, &error, &l1, &levels);
    out.error = half * error;
    out.l1_norm = half * l1;
    out.levels = levels;
    out.converged = std::isfinite(out.value) &&
                    out.error <= std::max(options.absolute_tolerance,
                                          options.relative_tolerance * std::abs(out.value));
    return out;
}

inline void require_proportion(double p)
{
    if (!(p > 0.0 && p <= 1.0)) {
        throw invalid_parameter("censoring proportion p must lie in (0, 1], got " + std::to_string(p));
    }
}

} // namespace detail

/// One entry I_p^{ij}(theta) with its quadrature error estimate.
inline QuadratureEstimate fisher_entry(Axis i, Axis j, const Theta& theta, double p,
                                       const QuadratureOptions& options = {})
{
    validate(theta);
    detail::require_proportion(p);
    const int a = static_cast<int>(i);
    const int b = static_cast<int>(j);
    auto integrand = [&](double w, double wc) {
        const Vector3 g = detail::probability_scale_gradient(w, wc, theta);
        return g[a] * g[b];
    };
    return detail::integrate_probability(integrand, p, options);
}

struct FisherMatrix {
    double p = 1.0;
    /// Proportion actually integrated to (p, or 1 - 1e-10 when p = 1 failed).
    double p_used = 1.0;
    Matrix3 entries = Matrix3::Zero();
    Matrix3 quadrature_error = Matrix3::Zero();
    /// Inverse of `entries`: asymptotic covariance of sqrt(n) (theta_hat - theta).
    std::optional<Matrix3> covariance;
    double condition_number = std::numeric_limits<double>::infinity();
    bool positive_definite = false;
    bool quadrature_converged = false;
    bool p_capped = false;
    bool near_singular = false;
};

inline constexpr double max_condition_number = 1e12;

/// All six distinct entries, the symmetric matrix, and its inverse through a
/// Cholesky factorization. The covariance is withheld when the matrix is not
/// positive definite or its condition number exceeds max_condition_number.
inline FisherMatrix fisher_matrix(const Theta& theta, double p, const QuadratureOptions& options = {})
{
    validate(theta);
    detail::require_proportion(p);
    FisherMatrix out;
    out.p = p;

    auto assemble = [&](double p_eval) {
        out.p_used = p_eval;
        out.quadrature_converged = true;
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                const auto e = fisher_entry(static_cast<Axis>(i), static_cast<Axis>(j), theta, p_eval, options);
                out.entries(i, j) = out.entries(j, i) = e.value;
                out.quadrature_error(i, j) = out.quadrature_error(j, i) = e.error;
                out.quadrature_converged = out.quadrature_converged && e.converged;
            }
        }
    };
    assemble(p);
    if (!out.quadrature_converged && p == 1.0) {
        assemble(1.0 - 1e-10);
        out.p_capped = true;
    }

    Eigen::SelfAdjointEigenSolver<Matrix3> eig(out.entries);
    const auto ev = eig.eigenvalues();
    out.positive_definite = ev.minCoeff() > 0.0;
    out.condition_number = out.positive_definite ? ev.maxCoeff() / ev.minCoeff()
                                                 : std::numeric_limits<double>::infinity();
    out.near_singular = !(out.condition_number <= max_condition_number);
    if (!out.near_singular) {
        Eigen::LLT<Matrix3> llt(out.entries);
        if (llt.info() == Eigen::Success) {
            Matrix3 cov = llt.solve(Matrix3::Identity());
            out.covariance = 0.5 * (cov + cov.transpose());
        } else {
            out.near_singular = true;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inference

struct Interval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double standard_error = 0.0;
};

struct ConfidenceIntervals {
    double level = 0.95;
    double p = 1.0;
    std::array<Interval, 3> intervals{}; ///< alpha, beta, sigma
    FisherMatrix fisher;
};

/// Wald intervals theta_k +- z * sqrt(cov_kk / n) with the information
/// evaluated at theta_hat and p = r/n. Lower limits are truncated at 0.
/// For an EED fit only alpha and sigma are estimated: the (alpha, sigma)
/// block of the information is inverted and the beta interval is degenerate.
inline ConfidenceIntervals asymptotic_ci(const FitResult& fit, const CensoredSample& sample, double level)
{
    if (!(level >= 0.0 && level < 1.0)) {
        throw invalid_parameter("confidence level must lie in [0, 1)");
    }
    ConfidenceIntervals out;
    out.level = level;
    out.p = static_cast<double>(sample.r()) / static_cast<double>(sample.n_total());
    out.fisher = fisher_matrix(fit.theta_hat, out.p);

    Matrix3 cov = Matrix3::Zero();
    if (fit.family == Family::eed) {
        Eigen::Matrix2d block;
        block << out.fisher.entries(0, 0), out.fisher.entries(0, 2),
                 out.fisher.entries(2, 0), out.fisher.entries(2, 2);
        Eigen::LLT<Eigen::Matrix2d> llt(block);
        if (llt.info() != Eigen::Success) {
            throw numerical_error("information matrix of the EED sub-model is not positive definite");
        }
        const Eigen::Matrix2d inv = llt.solve(Eigen::Matrix2d::Identity());
        cov(0, 0) = inv(0, 0);
        cov(0, 2) = cov(2, 0) = inv(0, 1);
        cov(2, 2) = inv(1, 1);
    } else {
        if (!out.fisher.covariance) {
            throw numerical_error("Fisher information is near-singular; covariance withheld");
        }
        cov = *out.fisher.covariance;
    }

    const double z = level == 0.0
                         ? 0.0
                         : boost::math::quantile(boost::math::normal_distribution<double>(),
                                                 0.5 + 0.5 * level);
    const Vector3 est = as_vector(fit.theta_hat);
    const double n = static_cast<double>(sample.n_total());
    for (int k = 0; k < 3; ++k) {
        Interval& iv = out.intervals[static_cast<std::size_t>(k)];
        iv.estimate = est[k];
        iv.standard_error = std::sqrt(std::max(cov(k, k), 0.0) / n);
        iv.lower = std::max(0.0, est[k] - z * iv.standard_error);
        iv.upper = est[k] + z * iv.standard_error;
    }
    return out;
}

struct LrtResult {
    double statistic = 0.0;
    double p_value = 1.0;
    FitResult ewd;
    FitResult eed;
    /// Statistic below -tolerance: one of the fits missed its maximum.
    bool optimization_failure = false;
};

/// Likelihood-ratio test of beta = 1 (EED inside EWD): 2 (lnL_EWD - lnL_EED),
/// referred to chi-square with one degree of freedom.
inline LrtResult lrt_beta_equals_one(const CensoredSample& sample, const FitConfig& config)
{
    LrtResult out;
    out.eed = fit(sample, Family::eed, config);
    out.ewd = fit(sample, Family::ewd, config);
    out.statistic = 2.0 * (out.ewd.loglik - out.eed.loglik);
    out.optimization_failure = out.statistic < -1e-6;
    const double stat = std::max(out.statistic, 0.0);
    out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1.0), stat));
    return out;
}

} // namespace ewd
