#pragma once

// Exponentiated-Weibull family EWD(alpha, beta, sigma):
//
//   F(x) = [1 - exp(-(x/sigma)^beta)]^alpha,   x > 0.
//
// alpha = 1 gives the Weibull family, beta = 1 the exponentiated-exponential
// family EED(alpha, lambda), alpha = beta = 1 the exponential and
// (alpha, beta) = (1, 2) the Rayleigh distribution.
//
// Every tail quantity is carried in log space. With u = (x/sigma)^beta and
// G = 1 - exp(-u) we keep log G, log F = alpha * log G and log(1 - F), which
// stay accurate when u is tiny (F ~ u^alpha) and when u is large (1 - F ~
// alpha * exp(-u)).

#include "ewd/error.hpp"
#include "ewd/numeric.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace ewd {

/// Parameters of EWD(alpha, beta, sigma). All three must be positive.
struct Theta {
    double alpha = 1.0; ///< first shape parameter (exponent on the Weibull CDF)
    double beta = 1.0;  ///< second shape parameter (Weibull shape)
    double sigma = 1.0; ///< scale, in the time units of the data

    friend bool operator==(const Theta&, const Theta&) = default;
};

/// Parameters of EED(alpha, lambda), the beta = 1 member of the family.
/// If X ~ EWD(alpha, beta, sigma) then X^beta ~ EED(alpha, sigma^beta).
struct EedTheta {
    double alpha = 1.0;
    double lambda = 1.0;

    friend bool operator==(const EedTheta&, const EedTheta&) = default;
};

inline void validate(const Theta& theta)
{
    detail::require_positive(theta.alpha, "alpha");
    detail::require_positive(theta.beta, "beta");
    detail::require_positive(theta.sigma, "sigma");
}

inline void validate(const EedTheta& theta)
{
    detail::require_positive(theta.alpha, "alpha");
    detail::require_positive(theta.lambda, "lambda");
}

/// The EED parameters of Y = X^beta for X ~ EWD(theta).
inline EedTheta to_eed(const Theta& theta)
{
    validate(theta);
    return {theta.alpha, std::pow(theta.sigma, theta.beta)};
}

/// EED(alpha, lambda) as the EWD member (alpha, 1, lambda).
inline Theta from_eed(const EedTheta& eed)
{
    validate(eed);
    return {eed.alpha, 1.0, eed.lambda};
}

/// How ewd_pdf treats x = 0 when the density diverges there (alpha*beta < 1).
enum class DensityAtZero {
    signal,   ///< throw domain_error
    extended, ///< return +infinity
};

namespace detail {

// Log-space building blocks at a single x > 0.
struct TailTerms {
    double log_ratio;   // log(x / sigma)
    double u;           // (x / sigma)^beta
    double log_u;       // beta * log(x / sigma)
    double log_g;       // log(1 - exp(-u))
    double log_cdf;     // alpha * log_g
    double log_surv;    // log(1 - F)
};

inline TailTerms tail_terms(double x, const Theta& theta) noexcept
{
    TailTerms t{};
    t.log_ratio = std::log(x) - std::log(theta.sigma);
    t.log_u = theta.beta * t.log_ratio;
    t.u = std::exp(t.log_u);
    t.log_g = (t.u < 1e-300) ? t.log_u : log_one_minus_exp_neg(t.u);
    t.log_cdf = theta.alpha * t.log_g;
    // log(-log F); in the far tail -log g = e^{-u} (1 + O(e^{-u})) underflows.
    const double log_neg_log_cdf =
        std::log(theta.alpha) + (t.u > 30.0 ? -t.u : std::log(-t.log_g));
    t.log_surv = log_neg_log_cdf < -20.0 ? log_neg_log_cdf - 0.5 * std::exp(log_neg_log_cdf)
                                         : log1mexp(t.log_cdf);
    return t;
}

inline double log_pdf_from_terms(const TailTerms& t, const Theta& theta) noexcept
{
    return std::log(theta.alpha) + std::log(theta.beta) - std::log(theta.sigma) +
           (theta.beta - 1.0) * t.log_ratio - t.u + (theta.alpha - 1.0) * t.log_g;
}

inline void require_nonnegative_x(double x)
{
    if (!(x >= 0.0) || std::isinf(x)) {
        throw domain_error("lifetime must be finite and >= 0, got " + std::to_string(x));
    }
}

inline void require_positive_x(double x)
{
    if (!(x > 0.0) || std::isinf(x)) {
        throw domain_error("lifetime must be finite and > 0, got " + std::to_string(x));
    }
}

} // namespace detail

/// log F(x; theta); -inf at x = 0.
inline double ewd_log_cdf(double x, const Theta& theta)
{
    validate(theta);
    detail::require_nonnegative_x(x);
    if (x == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return detail::tail_terms(x, theta).log_cdf;
}

inline double ewd_cdf(double x, const Theta& theta) { return std::exp(ewd_log_cdf(x, theta)); }

/// log(1 - F(x; theta)).
inline double ewd_log_survival(double x, const Theta& theta)
{
    validate(theta);
    detail::require_nonnegative_x(x);
    if (x == 0.0) {
        return 0.0;
    }
    return detail::tail_terms(x, theta).log_surv;
}

inline double ewd_survival(double x, const Theta& theta)
{
    return std::exp(ewd_log_survival(x, theta));
}

/// log f(x; theta) for x > 0.
inline double ewd_log_pdf(double x, const Theta& theta)
{
    validate(theta);
    detail::require_positive_x(x);
    return detail::log_pdf_from_terms(detail::tail_terms(x, theta), theta);
}

/// Density f = dF/dx = (alpha beta / sigma) (x/sigma)^(beta-1) e^{-u} G^(alpha-1).
///
/// Near zero f ~ (alpha beta / sigma) (x/sigma)^(alpha beta - 1), so the limit
/// at x = 0 is 0 for alpha*beta > 1, 1/sigma for alpha*beta = 1 and infinite
/// otherwise.
inline double ewd_pdf(double x, const Theta& theta, DensityAtZero at_zero = DensityAtZero::signal)
{
    validate(theta);
    detail::require_nonnegative_x(x);
    if (x == 0.0) {
        const double shape = theta.alpha * theta.beta;
        if (shape > 1.0) {
            return 0.0;
        }
        if (shape == 1.0) {
            return 1.0 / theta.sigma;
        }
        if (at_zero == DensityAtZero::extended) {
            return std::numeric_limits<double>::infinity();
        }
        throw domain_error("density diverges at x = 0 when alpha * beta < 1");
    }
    return std::exp(detail::log_pdf_from_terms(detail::tail_terms(x, theta), theta));
}

/// Inverse CDF: sigma * (-log(1 - u^(1/alpha)))^(1/beta).
inline double ewd_quantile(double u, const Theta& theta)
{
    validate(theta);
    if (!(u > 0.0 && u < 1.0)) {
        throw domain_error("quantile level must lie in (0, 1), got " + std::to_string(u));
    }
    // 1 - u^(1/alpha) without cancellation when u^(1/alpha) is close to one.
    const double one_minus = -std::expm1(std::log(u) / theta.alpha);
    const double w = -std::log(one_minus);
    return theta.sigma * std::pow(w, 1.0 / theta.beta);
}

/// log h(x) = log f(x) - log(1 - F(x)).
inline double ewd_log_hazard(double x, const Theta& theta)
{
    validate(theta);
    detail::require_positive_x(x);
    const auto t = detail::tail_terms(x, theta);
    return detail::log_pdf_from_terms(t, theta) - t.log_surv;
}

/// Hazard h = f / (1 - F), evaluated as exp(log f - log(1 - F)) so it stays
/// finite when 1 - F underflows.
inline double ewd_hazard(double x, const Theta& theta) { return std::exp(ewd_log_hazard(x, theta)); }

/// EED(alpha, lambda) CDF, i.e. EWD with beta = 1.
inline double eed_cdf(double y, const EedTheta& theta) { return ewd_cdf(y, from_eed(theta)); }
inline double eed_pdf(double y, const EedTheta& theta) { return ewd_pdf(y, from_eed(theta)); }

/// Uniform variate in (0, 1) from the top 53 bits of a 64-bit Mersenne
/// twister draw. Spelled out rather than using std::uniform_real_distribution
/// so the stream is identical across standard libraries.
inline double unit_uniform(std::mt19937_64& engine)
{
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

/// n i.i.d. draws by inverse-CDF sampling.
inline std::vector<double> ewd_sample(const Theta& theta, std::size_t n, std::uint64_t seed)
{
    validate(theta);
    if (n == 0) {
        throw invalid_parameter("sample size must be at least 1");
    }
    std::mt19937_64 engine(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(ewd_quantile(unit_uniform(engine), theta));
    }
    return out;
}

/// Per-observation pieces of the censored score, indexed (alpha, beta, sigma):
///   log_density[k]   = (d f / d theta_k) / f
///   cdf_over_surv[k] = (d F / d theta_k) / (1 - F)
struct ScoreComponents {
    std::array<double, 3> log_density{};
    std::array<double, 3> cdf_over_surv{};
};

/// Closed-form parameter derivatives of log f and of F / (1 - F).
///
/// With u = (x/sigma)^beta and K = 1 - u + (alpha - 1) x f / (alpha beta F):
///   f'_a/f = (1 + log F) / alpha          F'_a/(1-F) = F log F / (alpha (1-F))
///   f'_b/f = (1 + log u * K) / beta        F'_b/(1-F) = log u * x f / (beta^2 (1-F))
///   f'_s/f = -(beta/sigma) K               F'_s/(1-F) = -x f / (sigma (1-F))
/// and x f / (alpha beta F) = u / (e^u - 1).
inline ScoreComponents score_components(double x, const Theta& theta)
{
    validate(theta);
    detail::require_positive_x(x);
    const auto t = detail::tail_terms(x, theta);
    if (!std::isfinite(t.log_cdf) || !std::isfinite(t.log_surv) || t.log_cdf == 0.0) {
        throw numerical_error("F(x) is 0 or 1 at machine precision for x = " + std::to_string(x));
    }
    const double a = theta.alpha;
    const double b = theta.beta;
    const double s = theta.sigma;
    const double log_pdf = detail::log_pdf_from_terms(t, theta);

    const double xf_over_surv = std::exp(std::log(x) + log_pdf - t.log_surv);
    const double k = 1.0 - t.u + (a - 1.0) * u_over_expm1(t.u);
    const double f_over_surv = std::exp(t.log_cdf - t.log_surv);

    ScoreComponents c;
    c.log_density[0] = (1.0 + t.log_cdf) / a;
    c.cdf_over_surv[0] = f_over_surv * t.log_cdf / a;
    c.log_density[1] = (1.0 + t.log_u * k) / b;
    c.cdf_over_surv[1] = t.log_u * xf_over_surv / (b * b);
    c.log_density[2] = -(b / s) * k;
    c.cdf_over_surv[2] = -xf_over_surv / s;
    return c;
}

/// psi(z; alpha) = 1 + log(1 - z) [1 + ((1 - z)/z)(1 - alpha/(1 - z^alpha))],
/// the common factor of the beta- and sigma-derivatives of log h after the
/// substitution z = 1 - exp(-(x/sigma)^beta). psi(z; 1) = 1.
inline double psi(double z, double alpha)
{
    detail::require_positive(alpha, "alpha");
    if (!(z > 0.0 && z < 1.0)) {
        throw domain_error("psi is defined for z in (0, 1), got " + std::to_string(z));
    }
    const double one_minus_za = -std::expm1(alpha * std::log(z));
    return 1.0 + std::log1p(-z) * (1.0 + ((1.0 - z) / z) * (1.0 - alpha / one_minus_za));
}

} // namespace ewd
