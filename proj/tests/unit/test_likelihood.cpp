#include "catch_amalgamated.hpp"

#include "ewd/datasets.hpp"
#include "ewd/likelihood.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace ewd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent pdf/cdf for brute-force re-evaluation.
double ref_log_pdf(double x, const Theta& t)
{
    const double u = std::pow(x / t.sigma, t.beta);
    return std::log(t.alpha * t.beta / t.sigma) + (t.beta - 1) * std::log(x / t.sigma) - u +
           (t.alpha - 1) * std::log(-std::expm1(-u));
}

double ref_log_surv(double x, const Theta& t)
{
    const double u = std::pow(x / t.sigma, t.beta);
    return std::log1p(-std::pow(-std::expm1(-u), t.alpha));
}

CensoredSample random_sample(std::mt19937_64& rng, Theta& t)
{
    std::uniform_real_distribution<double> shape(0.4, 3.0);
    std::uniform_int_distribution<std::size_t> size(5, 60);
    t = {shape(rng), shape(rng), shape(rng)};
    const std::size_t n = size(rng);
    std::uniform_int_distribution<std::size_t> obs(std::max<std::size_t>(2, n / 2), n);
    auto x = ewd_sample(t, n, rng());
    std::sort(x.begin(), x.end());
    x.resize(obs(rng));
    // Evaluate away from the generating value.
    t.alpha *= 1.2;
    t.beta *= 0.9;
    t.sigma *= 1.1;
    return CensoredSample(std::move(x), n);
}

} // namespace

TEST_CASE("CensoredSample validation", "[likelihood]")
{
    CHECK_THROWS_AS(CensoredSample({}, 3), invalid_parameter);
    CHECK_THROWS_AS(CensoredSample({1, 2, 3}, 2), invalid_parameter);
    CHECK_THROWS_AS(CensoredSample({2, 1}, 3), invalid_parameter);
    CHECK_THROWS_AS(CensoredSample({0.0, 1}, 3), invalid_parameter);
    const auto c = CensoredSample::complete({3, 1, 2});
    CHECK(c.is_complete());
    CHECK(c.observed()[0] == 1.0);
    const CensoredSample s({1, 2, 3}, 5);
    CHECK(s.r() == 3);
    CHECK(s.n_censored() == 2);
    CHECK(s.largest_observed() == 3.0);
    CHECK(s.truncated(2) == CensoredSample({1, 2}, 5));
    CHECK_THROWS_AS(s.truncated(0), invalid_parameter);
}

TEST_CASE("exponential complete-data likelihood", "[likelihood]")
{
    const std::vector<double> x{0.3, 0.9, 1.4, 2.2, 5.0};
    const double s = 1.7;
    const auto sample = CensoredSample::complete(x);
    double expected = std::lgamma(6.0);
    for (double v : x) {
        expected += -v / s - std::log(s);
    }
    CHECK_THAT(log_likelihood(sample, {1, 1, s}), WithinRel(expected, 1e-13));

    const double sum = std::accumulate(x.begin(), x.end(), 0.0);
    const Vector3 g = score(sample, {1, 1, s});
    CHECK_THAT(g[2], WithinRel((-5.0 + sum / s) / s, 1e-12));

    const auto h = numerical_hessian(sample, {1, 1, s});
    CHECK_THAT(h.matrix(2, 2), WithinRel(5.0 / (s * s) - 2.0 * sum / (s * s * s), 1e-7));
    CHECK(h.matrix == h.matrix.transpose());
}

TEST_CASE("ball bearings EED value from the fitted table row", "[likelihood]")
{
    if (!benchmark_available(Benchmark::ball_bearings)) {
        SKIP("ball bearings data not found");
    }
    const auto sample = CensoredSample::complete(load_benchmark(Benchmark::ball_bearings).values);
    CHECK_THAT(-log_likelihood_kernel(sample, {5.2707, 1, 31.0035}), WithinAbs(112.9762, 1e-3));
    CHECK_THAT(log_likelihood(sample, {5.2707, 1, 31.0035}) - log_likelihood_kernel(sample, {5.2707, 1, 31.0035}),
               WithinRel(std::lgamma(24.0), 1e-13));
}

TEST_CASE("censored likelihood matches brute force", "[likelihood]")
{
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        Theta t;
        const auto s = random_sample(rng, t);
        double expected = log_permutation_constant(s.n_total(), s.r());
        for (double x : s.observed()) {
            expected += ref_log_pdf(x, t);
        }
        expected += static_cast<double>(s.n_censored()) * ref_log_surv(s.largest_observed(), t);
        CHECK_THAT(log_likelihood(s, t), WithinRel(expected, 1e-10));

        // Truncating to r' observations is the same as recomputing from scratch.
        const std::size_t r2 = std::max<std::size_t>(1, s.r() / 2);
        const auto tr = s.truncated(r2);
        double direct = log_permutation_constant(s.n_total(), r2);
        for (std::size_t k = 0; k < r2; ++k) {
            direct += ref_log_pdf(s.observed()[k], t);
        }
        direct += static_cast<double>(s.n_total() - r2) * ref_log_surv(s.observed()[r2 - 1], t);
        CHECK_THAT(log_likelihood(tr, t), WithinRel(direct, 1e-10));
    }
}

TEST_CASE("permutation constant shifts by log(n!/(n-r)!)", "[likelihood]")
{
    CHECK(log_permutation_constant(5, 0) == 0.0);
    CHECK_THAT(log_permutation_constant(5, 2), WithinRel(std::log(20.0), 1e-14));
    CHECK_THROWS_AS(log_permutation_constant(2, 3), invalid_parameter);
    const CensoredSample s({0.5, 0.8, 1.1}, 7);
    const Theta t{1.4, 1.3, 1.0};
    CHECK_THAT(log_likelihood(s, t) - log_likelihood_kernel(s, t), WithinRel(std::log(7.0 * 6 * 5), 1e-12));
}

TEST_CASE("power transform identity", "[likelihood]")
{
    std::mt19937_64 rng(22);
    for (int i = 0; i < 50; ++i) {
        Theta t;
        const auto s = random_sample(rng, t);
        const auto y = s.powered(t.beta);
        double jacobian = 0.0;
        for (double x : s.observed()) {
            jacobian += std::log(t.beta) + (t.beta - 1.0) * std::log(x);
        }
        const double ewd = log_likelihood(s, t);
        const double eed = eed_log_likelihood(y, to_eed(t));
        CHECK_THAT(ewd - eed, WithinRel(jacobian, 1e-9) || WithinAbs(jacobian, 1e-9));
    }
}

TEST_CASE("score against finite differences", "[likelihood]")
{
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        Theta t;
        const auto s = random_sample(rng, t);
        const Vector3 g = score(s, t);
        const Vector3 c = as_vector(t);
        for (int k = 0; k < 3; ++k) {
            const double fd = oracle::derivative(
                [&](double v) {
                    Vector3 p = c;
                    p[k] = v;
                    return log_likelihood(s, as_theta(p));
                },
                c[k], 1e-4 * c[k]);
            const double tol = 1e-6 * std::max(1.0, std::abs(fd));
            CHECK_THAT(g[k], WithinAbs(fd, tol));
        }
    }
}

TEST_CASE("extreme observations stay finite in log space", "[likelihood]")
{
    const CensoredSample s({1e-300, 1.0, 40.0}, 4);
    const double v = log_likelihood(s, {50.0, 3.0, 1.0});
    CHECK(std::isfinite(v));
    CHECK(v < -1e5);
    // Survival of the largest point underflows in linear space: e^{-64000}.
    CHECK(std::isfinite(log_likelihood(s, {1.0, 3.0, 1.0})));
}

TEST_CASE("Hessian predicts nearby values", "[likelihood]")
{
    std::mt19937_64 rng(24);
    Theta t;
    const auto s = random_sample(rng, t);
    const Vector3 c = as_vector(t);
    const Vector3 g = score(s, t);
    const auto h = numerical_hessian(s, t);
    CHECK_FALSE(h.ill_conditioned);
    const double base = log_likelihood(s, t);
    const Vector3 dir = Vector3(0.3, -0.5, 0.8).normalized();
    double prev_err = 0.0;
    for (double eps : {1e-2, 5e-3}) {
        const Vector3 d = eps * dir.cwiseProduct(c);
        const double predicted = base + g.dot(d) + 0.5 * d.dot(h.matrix * d);
        const double err = std::abs(log_likelihood(s, as_theta(c + d)) - predicted);
        if (prev_err > 0.0) {
            // Third-order remainder: halving the step cuts the error about 8x.
            CHECK(err < prev_err / 4.0);
        }
        prev_err = err;
    }
}
