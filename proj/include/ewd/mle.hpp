#pragma once

// Maximum likelihood under type II censoring by back-fitting.
//
// For fixed beta the data y_i = x_i^beta are a censored EED(alpha, lambda)
// sample with lambda = sigma^beta, and the EED score equations can be written
// as the fixed point
//
//   alpha = r / g1(alpha, lambda),     lambda = r * g2(alpha, lambda)
//
// with G_i = 1 - exp(-y_i/lambda) and
//
//   g1 = (n-r) G_r^a ln G_r / (1 - G_r^a) - sum_i ln G_i
//   g2 = [ (n-r) a y_r e^{-y_r/lambda} G_r^{a-1} / (1 - G_r^a)
//          - (a-1) sum_i y_i e^{-y_i/lambda} / G_i + sum_i y_i ] / r^2.
//
// Solving it gives alpha_hat(beta) and sigma_hat(beta) = lambda_hat^(1/beta),
// and hence the profile log-likelihood L1(beta). The outer loop alternates
// the inner solve with a maximization of L1 over beta until the parameter
// change drops below epsilon_outer. fit_direct maximizes the full
// three-parameter likelihood instead; both must reach the same maximum.

#include "ewd/distribution.hpp"
#include "ewd/error.hpp"
#include "ewd/likelihood.hpp"
#include "ewd/numeric.hpp"
#include "ewd/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ewd {

enum class Family { eed, ewd };

inline std::string_view to_string(Family f) { return f == Family::eed ? "eed" : "ewd"; }

struct FitConfig {
    double epsilon_outer = 1e-7;  ///< relative parameter change that stops back-fitting
    double epsilon_inner = 1e-8;  ///< relative (alpha, lambda) change that stops the fixed point
    int max_outer = 50;
    int max_inner = 500;
    double beta_init = 1.0;
    double alpha_init = 1.0;
    double lambda_init = 0.0;     ///< <= 0 selects the mean of the transformed observations
    double beta_lo = 0.05;
    double beta_hi = 20.0;
    int beta_scan_points = 25;    ///< profile evaluations in the initial bracket search
    double beta_tolerance = 1e-9; ///< relative accuracy of the Brent search in log(beta)
    double score_tolerance = 1e-5;///< max |theta_k d lnL / d theta_k| / r accepted at a solution

    void validate() const
    {
        detail::require_positive(epsilon_outer, "epsilon_outer");
        detail::require_positive(epsilon_inner, "epsilon_inner");
        detail::require_positive(beta_tolerance, "beta_tolerance");
        detail::require_positive(score_tolerance, "score_tolerance");
        detail::require_positive(beta_init, "beta_init");
        detail::require_positive(alpha_init, "alpha_init");
        detail::require_positive(beta_lo, "beta_lo");
        detail::require_positive(beta_hi, "beta_hi");
        if (max_outer < 1 || max_inner < 1) {
            throw invalid_parameter("iteration limits must be at least 1");
        }
        if (!(beta_lo < beta_hi)) {
            throw invalid_parameter("beta bracket must satisfy beta_lo < beta_hi");
        }
        if (beta_init < beta_lo || beta_init > beta_hi) {
            throw invalid_parameter("beta_init must lie inside the beta bracket");
        }
        if (beta_scan_points < 3) {
            throw invalid_parameter("beta_scan_points must be at least 3");
        }
        if (lambda_init < 0.0 || std::isnan(lambda_init)) {
            throw invalid_parameter("lambda_init must be >= 0 (0 selects the data mean)");
        }
    }
};

// ---------------------------------------------------------------------------
// EED fixed point

namespace detail {

// Censored-point pieces at q = y_r / lambda:
//   ratio_g1 = G^a ln G / (1 - G^a)
//   ratio_g2 = a y e^{-q} G^{a-1} / (1 - G^a)
struct CensoredEedTerms {
    double ratio_g1;
    double ratio_g2;
};

inline CensoredEedTerms censored_eed_terms(double y, double alpha, double lambda)
{
    const double q = y / lambda;
    const double log_g = log_one_minus_exp_neg(q);
    const double a_log_g = alpha * log_g;
    if (a_log_g == 0.0) {
        // G^a == 1 in double precision: take the q -> infinity limits.
        return {-1.0 / alpha, y};
    }
    const double surv = -std::expm1(a_log_g);
    const double ga = std::exp(a_log_g);
    return {ga * log_g / surv,
            alpha * y * std::exp(-q + (alpha - 1.0) * log_g) / surv};
}

} // namespace detail

namespace detail {

struct EedG {
    double g1;
    double g2;
};

// g1 and g2 in one pass; both need e^{-q} and 1 - e^{-q} at q = y_i / lambda.
inline EedG eed_g(double alpha, double lambda, const CensoredSample& y)
{
    require_positive(alpha, "alpha");
    require_positive(lambda, "lambda");
    CompensatedSum s1;
    CompensatedSum s2;
    constexpr double ln2 = 0.6931471805599453;
    for (double yi : y.observed()) {
        const double q = yi / lambda;
        double e;
        double one_minus_e;
        double log_g;
        if (q < ln2) {
            one_minus_e = -std::expm1(-q);
            e = 1.0 - one_minus_e;
            log_g = std::log(one_minus_e);
        } else {
            e = std::exp(-q);
            one_minus_e = 1.0 - e;
            log_g = std::log1p(-e);
        }
        s1 += -log_g;
        // y e^{-q} / (1 - e^{-q})
        s2 += yi - (alpha - 1.0) * yi * e / one_minus_e;
    }
    if (y.n_censored() > 0) {
        const auto c = censored_eed_terms(y.largest_observed(), alpha, lambda);
        const double m = static_cast<double>(y.n_censored());
        s1 += m * c.ratio_g1;
        s2 += m * c.ratio_g2;
    }
    const double r = static_cast<double>(y.r());
    const EedG out{s1.value(), s2.value() / (r * r)};
    if (!std::isfinite(out.g1)) {
        throw numerical_error("g1 overflowed: 1 - exp(-y/lambda) underflowed");
    }
    if (!std::isfinite(out.g2)) {
        throw numerical_error("g2 overflowed");
    }
    return out;
}

} // namespace detail

inline double eed_g1(double alpha, double lambda, const CensoredSample& y)
{
    return detail::eed_g(alpha, lambda, y).g1;
}

inline double eed_g2(double alpha, double lambda, const CensoredSample& y)
{
    return detail::eed_g(alpha, lambda, y).g2;
}

/// EED censored score in (alpha, lambda):
///   d/d alpha  = r/alpha - g1,    d/d lambda = r (r g2 - lambda) / lambda^2.
inline Eigen::Vector2d eed_score(double alpha, double lambda, const CensoredSample& y)
{
    const double r = static_cast<double>(y.r());
    const auto g = detail::eed_g(alpha, lambda, y);
    return {r / alpha - g.g1, r * (r * g.g2 - lambda) / (lambda * lambda)};
}

/// Score in log-parameters divided by r: the scale-free residual used for
/// convergence checks.
inline double eed_scaled_score_norm(double alpha, double lambda, const CensoredSample& y)
{
    const Eigen::Vector2d s = eed_score(alpha, lambda, y);
    const double r = static_cast<double>(y.r());
    return std::hypot(alpha * s[0], lambda * s[1]) / r;
}

enum class InnerMethod { fixed_point, damped_fixed_point, newton };

inline std::string_view to_string(InnerMethod m)
{
    switch (m) {
    case InnerMethod::fixed_point: return "fixed_point";
    case InnerMethod::damped_fixed_point: return "damped_fixed_point";
    case InnerMethod::newton: return "newton";
    }
    return "?";
}

struct FixedPointResult {
    double alpha = 0.0;
    double lambda = 0.0;
    std::vector<std::pair<double, double>> trace; ///< (alpha, lambda) iterates when recorded
    bool converged = false;
    InnerMethod method = InnerMethod::fixed_point;
    double omega = 1.0;     ///< damping weight of the successful fixed-point attempt
    int iterations = 0;     ///< total over all attempts
    double score_norm = std::numeric_limits<double>::infinity();
};

namespace detail {

enum class AttemptOutcome { converged, diverged, stalled, exhausted };

// Damped Newton on the EED log-likelihood in (log alpha, log lambda).
inline bool eed_newton(const CensoredSample& y, double& alpha, double& lambda, double tolerance,
                       int max_iterations, int& iterations,
                       std::vector<std::pair<double, double>>* trace)
{
    const double r = static_cast<double>(y.r());
    auto value = [&](double la, double ll) {
        return eed_log_likelihood(y, {std::exp(la), std::exp(ll)}, LikelihoodConstant::exclude);
    };
    auto grad = [&](double la, double ll) -> Eigen::Vector2d {
        const double a = std::exp(la);
        const double l = std::exp(ll);
        const Eigen::Vector2d s = eed_score(a, l, y);
        return {a * s[0], l * s[1]};
    };
    double la = std::log(alpha);
    double ll = std::log(lambda);
    double f = value(la, ll);
    for (int it = 0; it < max_iterations; ++it) {
        ++iterations;
        const Eigen::Vector2d g = grad(la, ll);
        if (g.norm() / r < tolerance) {
            alpha = std::exp(la);
            lambda = std::exp(ll);
            return true;
        }
        Eigen::Matrix2d h;
        constexpr double step = 1e-6;
        h.col(0) = (grad(la + step, ll) - grad(la - step, ll)) / (2 * step);
        h.col(1) = (grad(la, ll + step) - grad(la, ll - step)) / (2 * step);
        h = 0.5 * (h + h.transpose()).eval();
        Eigen::Vector2d dir;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
        if (eig.eigenvalues().maxCoeff() < 0.0) {
            dir = -h.ldlt().solve(g);
        } else {
            dir = g / std::max(1.0, g.norm());
        }
        const double len = dir.norm();
        if (len > 2.0) {
            dir *= 2.0 / len;
        }
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const double fa = value(la + t * dir[0], ll + t * dir[1]);
            if (std::isfinite(fa) && fa >= f + 1e-4 * t * g.dot(dir)) {
                la += t * dir[0];
                ll += t * dir[1];
                f = fa;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (trace) {
            trace->emplace_back(std::exp(la), std::exp(ll));
        }
        if (!moved) {
            break;
        }
    }
    alpha = std::exp(la);
    lambda = std::exp(ll);
    return grad(la, ll).norm() / r < tolerance;
}

} // namespace detail

/// Solve the censored EED likelihood equations in (alpha, lambda) by the
/// fixed-point iteration. A diverging iteration is retried with averaged
/// updates (omega halved from 1 down to 1/8); a stalled or failed iteration,
/// or a limit point whose score does not vanish, falls back to damped Newton.
inline FixedPointResult eed_fixed_point(const CensoredSample& y, const FitConfig& config,
                                        std::optional<EedTheta> start = std::nullopt,
                                        bool record_trace = false)
{
    config.validate();
    const double r = static_cast<double>(y.r());
    double alpha0 = config.alpha_init;
    double lambda0 = config.lambda_init;
    if (lambda0 <= 0.0) {
        CompensatedSum s;
        for (double v : y.observed()) {
            s += v;
        }
        lambda0 = s.value() / r;
    }
    if (start) {
        alpha0 = start->alpha;
        lambda0 = start->lambda;
    }
    validate(EedTheta{alpha0, lambda0});

    FixedPointResult out;
    auto* trace = record_trace ? &out.trace : nullptr;
    if (trace) {
        trace->emplace_back(alpha0, lambda0);
    }

    double alpha = alpha0;
    double lambda = lambda0;
    bool solved = false;
    for (double omega = 1.0; omega >= 0.125 && !solved; omega *= 0.5) {
        alpha = alpha0;
        lambda = lambda0;
        if (trace && omega < 1.0) {
            trace->emplace_back(alpha, lambda);
        }
        auto outcome = detail::AttemptOutcome::exhausted;
        double best_delta = std::numeric_limits<double>::infinity();
        std::vector<double> deltas;
        for (int k = 0; k < config.max_inner; ++k) {
            ++out.iterations;
            double a_new = 0.0;
            double l_new = 0.0;
            try {
                const auto g = detail::eed_g(alpha, lambda, y);
                a_new = r / g.g1;
                l_new = r * g.g2;
            } catch (const numerical_error&) {
                outcome = detail::AttemptOutcome::diverged;
                break;
            }
            a_new = (1.0 - omega) * alpha + omega * a_new;
            l_new = (1.0 - omega) * lambda + omega * l_new;
            if (!(a_new > 0.0) || !(l_new > 0.0) || !std::isfinite(a_new) || !std::isfinite(l_new)) {
                outcome = detail::AttemptOutcome::diverged;
                break;
            }
            const double delta = std::hypot((a_new - alpha) / alpha, (l_new - lambda) / lambda);
            alpha = a_new;
            lambda = l_new;
            if (trace) {
                trace->emplace_back(alpha, lambda);
            }
            if (delta < config.epsilon_inner) {
                outcome = detail::AttemptOutcome::converged;
                break;
            }
            best_delta = std::min(best_delta, delta);
            deltas.push_back(delta);
            if (delta > 1e3 * best_delta || delta > 1e6) {
                outcome = detail::AttemptOutcome::diverged;
                break;
            }
            // Contraction slower than a factor 2 per 50 steps cannot meet the
            // tolerance within max_inner; hand over to Newton.
            if (deltas.size() > 50 && delta > 0.5 * deltas[deltas.size() - 51]) {
                outcome = detail::AttemptOutcome::stalled;
                break;
            }
        }
        if (outcome == detail::AttemptOutcome::converged) {
            out.method = omega == 1.0 ? InnerMethod::fixed_point : InnerMethod::damped_fixed_point;
            out.omega = omega;
            solved = true;
        } else if (outcome == detail::AttemptOutcome::stalled) {
            break;
        }
    }

    if (solved) {
        out.score_norm = eed_scaled_score_norm(alpha, lambda, y);
        solved = out.score_norm < config.score_tolerance;
    }
    if (!solved) {
        // Newton from the best point available: the fixed-point limit when it
        // exists, otherwise the starting values.
        if (!(alpha > 0.0 && lambda > 0.0 && std::isfinite(alpha) && std::isfinite(lambda)) ||
            !std::isfinite(eed_log_likelihood(y, {alpha, lambda}, LikelihoodConstant::exclude))) {
            alpha = alpha0;
            lambda = lambda0;
        }
        const bool ok = detail::eed_newton(y, alpha, lambda, 1e-2 * config.score_tolerance, 200,
                                           out.iterations, trace);
        out.method = InnerMethod::newton;
        out.score_norm = eed_scaled_score_norm(alpha, lambda, y);
        solved = ok || out.score_norm < config.score_tolerance;
    }
    out.alpha = alpha;
    out.lambda = lambda;
    out.converged = solved;
    return out;
}

// ---------------------------------------------------------------------------
// Profile likelihood in beta

struct ProfilePoint {
    double beta = 0.0;
    double alpha = 0.0;
    double sigma = 0.0;
    double lambda = 0.0;
    double loglik = -std::numeric_limits<double>::infinity();        ///< with n!/(n-r)!
    double loglik_kernel = -std::numeric_limits<double>::infinity(); ///< without it
    FixedPointResult inner;

    Theta theta() const { return {alpha, beta, sigma}; }
};

/// L1(beta): transform y = x^beta, solve the EED equations, map back
/// sigma_hat(beta) = lambda_hat^(1/beta) and evaluate the EWD log-likelihood.
inline ProfilePoint profile_loglik(double beta, const CensoredSample& sample, const FitConfig& config,
                                   std::optional<EedTheta> start = std::nullopt,
                                   bool record_trace = false)
{
    detail::require_positive(beta, "beta");
    const CensoredSample y = sample.powered(beta);
    ProfilePoint p;
    p.beta = beta;
    p.inner = eed_fixed_point(y, config, start, record_trace);
    p.alpha = p.inner.alpha;
    p.lambda = p.inner.lambda;
    p.sigma = std::pow(p.lambda, 1.0 / beta);
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
        return p;
    }
    p.loglik_kernel = log_likelihood_kernel(sample, p.theta());
    p.loglik = p.loglik_kernel + log_permutation_constant(sample.n_total(), sample.r());
    return p;
}

// ---------------------------------------------------------------------------
// Fits

enum class FitMethod { backfit, direct, both_agree };

inline std::string_view to_string(FitMethod m)
{
    switch (m) {
    case FitMethod::backfit: return "backfit";
    case FitMethod::direct: return "direct";
    case FitMethod::both_agree: return "both-agree";
    }
    return "?";
}

enum class FitStatus {
    converged,
    max_iterations,        ///< outer loop hit max_outer
    inner_failure,         ///< EED solver did not converge at the reported beta
    beta_at_bracket_edge,  ///< L1 still increasing at an end of the beta bracket
    score_not_zero,        ///< iteration stopped but the score check failed
    optimizer_failure,     ///< direct optimizer did not converge
};

inline std::string_view to_string(FitStatus s)
{
    switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max_iterations";
    case FitStatus::inner_failure: return "inner_failure";
    case FitStatus::beta_at_bracket_edge: return "beta_at_bracket_edge";
    case FitStatus::score_not_zero: return "score_not_zero";
    case FitStatus::optimizer_failure: return "optimizer_failure";
    }
    return "?";
}

/// Inner solve of one outer iteration.
struct InnerTrace {
    double beta = 0.0;
    InnerMethod method = InnerMethod::fixed_point;
    std::vector<std::pair<double, double>> path;
};

struct FitResult {
    Family family = Family::ewd;
    Theta theta_hat;
    double loglik = -std::numeric_limits<double>::infinity();
    double loglik_kernel = -std::numeric_limits<double>::infinity();
    int n_outer = 0;
    std::vector<InnerTrace> inner_trace;
    /// L1(beta^(k)) after each outer iteration.
    std::vector<double> profile_history;
    bool converged = false;
    FitStatus status = FitStatus::converged;
    FitMethod method = FitMethod::backfit;
    /// max_k |theta_k d lnL/d theta_k| / r over the free parameters.
    double score_norm = std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    std::size_t r = 0;
};

/// max_k |theta_k * score_k| / r over the selected coordinates.
inline double scaled_score_norm(const CensoredSample& sample, const Theta& theta, bool include_beta = true)
{
    Vector3 s;
    try {
        s = score(sample, theta);
    } catch (const numerical_error&) {
        return std::numeric_limits<double>::infinity();
    }
    const Vector3 t = as_vector(theta);
    double m = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (k == 1 && !include_beta) {
            continue;
        }
        m = std::max(m, std::abs(t[k] * s[k]));
    }
    return m / static_cast<double>(sample.r());
}

namespace detail {

inline double relative_change(const Theta& a, const Theta& b)
{
    return std::sqrt(std::pow((a.alpha - b.alpha) / b.alpha, 2) +
                     std::pow((a.beta - b.beta) / b.beta, 2) +
                     std::pow((a.sigma - b.sigma) / b.sigma, 2));
}

// Maximize L1 over [lo, hi]: geometric grid anchored at `anchor`, then
// Brent search between the neighbours of the best grid point.
inline ProfilePoint maximize_profile(const CensoredSample& sample, const FitConfig& config,
                                     double lo, double hi, double anchor, int points,
                                     std::optional<ProfilePoint> warm)
{
    std::optional<EedTheta> start;
    if (warm) {
        start = EedTheta{warm->alpha, warm->lambda};
    }
    auto warm_for = [&](double beta) -> std::optional<EedTheta> {
        if (!start) {
            return std::nullopt;
        }
        // sigma carries over between betas; lambda = sigma^beta.
        const double sigma = std::pow(start->lambda, 1.0 / warm->beta);
        const double lambda = std::pow(sigma, beta);
        if (!(lambda > 0.0) || !std::isfinite(lambda)) {
            return std::nullopt;
        }
        return EedTheta{start->alpha, lambda};
    };
    auto evaluate = [&](double beta) {
        ProfilePoint p = profile_loglik(beta, sample, config, warm_for(beta));
        if (!p.inner.converged || !std::isfinite(p.loglik)) {
            // A cold start sometimes succeeds where the warm start wandered off.
            ProfilePoint cold = profile_loglik(beta, sample, config);
            if (cold.inner.converged && (!p.inner.converged || cold.loglik > p.loglik)) {
                p = std::move(cold);
            }
        }
        return p;
    };

    // Grid: anchor * rho^k inside [lo, hi], plus both ends.
    std::vector<double> grid;
    const double log_lo = std::log(lo);
    const double log_hi = std::log(hi);
    const double step = (log_hi - log_lo) / static_cast<double>(points - 1);
    const double log_anchor = std::log(std::clamp(anchor, lo, hi));
    for (double v = log_anchor; v > log_lo; v -= step) {
        grid.push_back(std::exp(v));
    }
    for (double v = log_anchor + step; v < log_hi; v += step) {
        grid.push_back(std::exp(v));
    }
    grid.push_back(lo);
    grid.push_back(hi);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<ProfilePoint> values;
    values.reserve(grid.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values.push_back(evaluate(grid[i]));
        if (values[i].inner.converged && (!values[best].inner.converged ||
                                          values[i].loglik > values[best].loglik)) {
            best = i;
        }
        if (values[i].inner.converged) {
            start = EedTheta{values[i].alpha, values[i].lambda};
            warm = values[i];
        }
    }
    ProfilePoint best_point = values[best];
    if (grid.size() < 3) {
        return best_point;
    }
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[best + 1 == grid.size() ? best : best + 1];
    warm = best_point;
    start = EedTheta{best_point.alpha, best_point.lambda};

    // Brent search in log(beta): L1 varies on a multiplicative scale.
    auto objective = [&](double log_beta) {
        ProfilePoint p = evaluate(std::exp(log_beta));
        if (!p.inner.converged) {
            return -std::numeric_limits<double>::infinity();
        }
        if (p.loglik > best_point.loglik) {
            best_point = p;
        }
        return p.loglik;
    };
    optimize::brent_max(objective, std::log(a), std::log(b), config.beta_tolerance);
    return best_point;
}

inline FitResult finalize(FitResult fit, const CensoredSample& sample, const FitConfig& config,
                          bool beta_free)
{
    fit.n = sample.n_total();
    fit.r = sample.r();
    fit.loglik_kernel = log_likelihood_kernel(sample, fit.theta_hat);
    fit.loglik = fit.loglik_kernel + log_permutation_constant(sample.n_total(), sample.r());
    fit.score_norm = scaled_score_norm(sample, fit.theta_hat, beta_free);
    if (fit.status == FitStatus::converged && !(fit.score_norm < config.score_tolerance)) {
        fit.status = FitStatus::score_not_zero;
    }
    fit.converged = fit.status == FitStatus::converged;
    return fit;
}

} // namespace detail

/// EED fit (beta fixed at 1): a single fixed-point solve.
inline FitResult fit_eed(const CensoredSample& sample, const FitConfig& config)
{
    config.validate();
    FitResult fit;
    fit.family = Family::eed;
    fit.method = FitMethod::backfit;
    const FixedPointResult inner = eed_fixed_point(sample, config, std::nullopt, true);
    fit.theta_hat = {inner.alpha, 1.0, inner.lambda};
    fit.n_outer = 1;
    fit.inner_trace.push_back({1.0, inner.method, inner.trace});
    fit.status = inner.converged ? FitStatus::converged : FitStatus::inner_failure;
    fit = detail::finalize(std::move(fit), sample, config, false);
    fit.profile_history.push_back(fit.loglik);
    return fit;
}

/// Back-fitting estimate of the EWD parameters.
///
/// Step 1 solves the EED equations at the current beta; step 2 maximizes the
/// profile L1 over beta (bracket scan on the first pass, a local bracket
/// afterwards). The loop stops when the relative change in theta is below
/// epsilon_outer.
inline FitResult fit_backfitting(const CensoredSample& sample, const FitConfig& config)
{
    config.validate();
    FitResult fit;
    fit.family = Family::ewd;
    fit.method = FitMethod::backfit;

    double beta = config.beta_init;
    std::optional<ProfilePoint> current;
    std::optional<Theta> previous;
    fit.status = FitStatus::max_iterations;
    for (int k = 1; k <= config.max_outer; ++k) {
        fit.n_outer = k;
        // Step 1: (alpha, sigma) at fixed beta.
        std::optional<EedTheta> warm;
        if (current) {
            warm = EedTheta{current->alpha, current->lambda};
        }
        ProfilePoint step1 = profile_loglik(beta, sample, config, warm, true);
        if (!step1.inner.converged && warm) {
            step1 = profile_loglik(beta, sample, config, std::nullopt, true);
        }
        fit.inner_trace.push_back({beta, step1.inner.method, step1.inner.trace});
        if (!step1.inner.converged) {
            fit.status = FitStatus::inner_failure;
            fit.theta_hat = step1.theta();
            break;
        }

        // Step 2: beta maximizing L1.
        ProfilePoint step2;
        if (k == 1) {
            step2 = detail::maximize_profile(sample, config, config.beta_lo, config.beta_hi, beta,
                                             config.beta_scan_points, step1);
        } else {
            double lo = std::max(config.beta_lo, beta / 1.2);
            double hi = std::min(config.beta_hi, beta * 1.2);
            step2 = detail::maximize_profile(sample, config, lo, hi, beta, 5, step1);
            // Expand while the maximizer sits on an interior bracket end.
            while ((step2.beta <= lo * (1 + 1e-6) && lo > config.beta_lo) ||
                   (step2.beta >= hi * (1 - 1e-6) && hi < config.beta_hi)) {
                lo = std::max(config.beta_lo, lo / 1.5);
                hi = std::min(config.beta_hi, hi * 1.5);
                step2 = detail::maximize_profile(sample, config, lo, hi, step2.beta, 7, step2);
            }
        }
        if (step1.loglik > step2.loglik) {
            step2 = step1;
        }
        beta = step2.beta;
        current = step2;
        fit.profile_history.push_back(step2.loglik);
        const Theta theta = step2.theta();
        fit.theta_hat = theta;
        if (previous && detail::relative_change(theta, *previous) < config.epsilon_outer) {
            fit.status = FitStatus::converged;
            break;
        }
        previous = theta;
    }

    const double edge_tol = 1e-6;
    if (fit.status == FitStatus::converged &&
        (fit.theta_hat.beta <= config.beta_lo * (1 + edge_tol) ||
         fit.theta_hat.beta >= config.beta_hi * (1 - edge_tol))) {
        fit.status = FitStatus::beta_at_bracket_edge;
    }
    return detail::finalize(std::move(fit), sample, config, true);
}

/// Direct maximization of the full likelihood with a box-constrained
/// damped Newton method in log-parameters, from several starting values.
/// With fixed_beta set, beta is held there (fixed_beta = 1 is the EED fit).
inline FitResult fit_direct(const CensoredSample& sample, const FitConfig& config,
                            std::optional<double> fixed_beta = std::nullopt)
{
    config.validate();
    if (fixed_beta) {
        detail::require_positive(*fixed_beta, "fixed beta");
    }
    const double x_min = sample.observed().front();
    const double x_max = sample.largest_observed();

    Eigen::VectorXd lower(3);
    Eigen::VectorXd upper(3);
    lower << std::log(1e-8), std::log(config.beta_lo), std::log(x_min) - 60.0;
    upper << std::log(1e8), std::log(config.beta_hi), std::log(x_max) + 60.0;
    if (fixed_beta) {
        lower[1] = upper[1] = std::log(*fixed_beta);
    }

    auto fg = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
        const Theta theta{std::exp(w[0]), std::exp(w[1]), std::exp(w[2])};
        const double value = log_likelihood_kernel(sample, theta);
        if (!std::isfinite(value)) {
            return -std::numeric_limits<double>::infinity();
        }
        try {
            const Vector3 s = score(sample, theta);
            grad.resize(3);
            grad << theta.alpha * s[0], theta.beta * s[1], theta.sigma * s[2];
        } catch (const numerical_error&) {
            return -std::numeric_limits<double>::infinity();
        }
        if (!grad.allFinite()) {
            return -std::numeric_limits<double>::infinity();
        }
        return value;
    };

    std::vector<double> start_betas;
    if (fixed_beta) {
        start_betas.push_back(*fixed_beta);
    } else {
        for (double b : {1.0, 0.5, 2.0, 4.0}) {
            start_betas.push_back(std::clamp(b, config.beta_lo, config.beta_hi));
        }
    }

    optimize::BoxOptions options;
    options.gradient_tolerance = 1e-7 * static_cast<double>(sample.r());

    optimize::BoxResult best;
    for (double b : start_betas) {
        // Exponential-on-x^beta start: lambda = (sum y + (n - r) y_r) / r.
        CompensatedSum total;
        for (double x : sample.observed()) {
            total += std::pow(x, b);
        }
        total += static_cast<double>(sample.n_censored()) * std::pow(x_max, b);
        const double lambda = total.value() / static_cast<double>(sample.r());
        Eigen::VectorXd w(3);
        w << 0.0, std::log(b), std::log(lambda) / b;
        optimize::BoxResult res = optimize::maximize_box(fg, w, lower, upper, options);
        if (res.value > best.value) {
            best = res;
        }
    }

    FitResult fit;
    fit.family = fixed_beta && *fixed_beta == 1.0 ? Family::eed : Family::ewd;
    fit.method = FitMethod::direct;
    fit.n_outer = 0;
    if (best.x.size() != 3) {
        fit.status = FitStatus::optimizer_failure;
        fit.theta_hat = {1.0, fixed_beta.value_or(1.0), x_max};
        fit.n = sample.n_total();
        fit.r = sample.r();
        return fit;
    }
    fit.theta_hat = {std::exp(best.x[0]), std::exp(best.x[1]), std::exp(best.x[2])};
    fit.status = best.converged ? FitStatus::converged : FitStatus::optimizer_failure;
    if (!fixed_beta && (best.x[1] <= lower[1] || best.x[1] >= upper[1])) {
        fit.status = FitStatus::beta_at_bracket_edge;
    }
    fit = detail::finalize(std::move(fit), sample, config, !fixed_beta);
    fit.profile_history.push_back(fit.loglik);
    return fit;
}

/// Likelihood agreement below which back-fitting and direct fits are taken
/// to have reached the same maximum.
inline constexpr double agreement_tolerance = 1e-5;

/// Fit a family by back-fitting; with cross_check, also run the direct
/// optimizer, keep the better of the two and mark both_agree when their
/// log-likelihoods match within agreement_tolerance.
inline FitResult fit(const CensoredSample& sample, Family family, const FitConfig& config,
                     bool cross_check = false)
{
    FitResult primary = family == Family::eed ? fit_eed(sample, config) : fit_backfitting(sample, config);
    if (!cross_check) {
        return primary;
    }
    const FitResult direct =
        family == Family::eed ? fit_direct(sample, config, 1.0) : fit_direct(sample, config);
    if (std::abs(primary.loglik - direct.loglik) < agreement_tolerance) {
        primary.method = FitMethod::both_agree;
    } else if (direct.loglik > primary.loglik) {
        return direct;
    }
    return primary;
}

} // namespace ewd
