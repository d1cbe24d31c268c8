#include "catch_amalgamated.hpp"

#include "ewd/datasets.hpp"
#include "ewd/fisher.hpp"
#include "fisher_oracle.hpp"

#include <cmath>
#include <random>

using namespace ewd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr int row_of[6] = {0, 1, 2, 0, 0, 1};
constexpr int col_of[6] = {0, 1, 2, 1, 2, 2};

double entry(const Matrix3& m, int k) { return m(row_of[k], col_of[k]); }

} // namespace

TEST_CASE("log-hazard partials", "[fisher]")
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> pos(0.3, 3.0);
    std::uniform_real_distribution<double> q(0.05, 0.95);
    for (int i = 0; i < 100; ++i) {
        const Theta t{pos(rng), pos(rng), pos(rng)};
        const double x = ewd_quantile(q(rng), t);
        const Vector3 g = log_hazard_partials(x, t);
        const Vector3 c = as_vector(t);

        const auto sc = score_components(x, t);
        for (int k = 0; k < 3; ++k) {
            const double fd = oracle::derivative(
                [&](double v) {
                    Vector3 p = c;
                    p[k] = v;
                    return ewd_log_hazard(x, as_theta(p));
                },
                c[k], 1e-4 * c[k]);
            CHECK_THAT(g[k], WithinRel(fd, 1e-6) || WithinAbs(fd, 1e-9));
            // d ln h = f'/f + F'/(1 - F)
            const double sum = sc.log_density[static_cast<std::size_t>(k)] + sc.cdf_over_surv[static_cast<std::size_t>(k)];
            CHECK_THAT(g[k], WithinRel(sum, 1e-10) || WithinAbs(sum, 1e-12));
        }
    }
}

TEST_CASE("psi identity under the substitution", "[fisher]")
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(0.3, 3.0);
    std::uniform_real_distribution<double> q(0.02, 0.98);
    for (int i = 0; i < 200; ++i) {
        const Theta t{pos(rng), pos(rng), pos(rng)};
        const double x = ewd_quantile(q(rng), t);
        const double u = std::pow(x / t.sigma, t.beta);
        const double big_f = ewd_cdf(x, t);
        const double f = ewd_pdf(x, t);
        const double lhs = 1.0 - u + (t.alpha - 1.0) * x * f / (t.alpha * t.beta * big_f) + x * f / (t.beta * (1.0 - big_f));
        const double z = -std::expm1(-u);
        CHECK_THAT(lhs, WithinAbs(psi(z, t.alpha), 1e-10 * std::max(1.0, std::abs(lhs))));
    }
}

TEST_CASE("entries against 50-digit values", "[fisher]")
{
    CHECK_THAT(fisher_entry(Axis::alpha, Axis::alpha, {1, 1, 1}, 0.5).value, WithinRel(0.98045301391820142467, 1e-9));

    struct Case {
        Theta theta;
        double p;
        std::array<double, 6> expected;
    };
    const Case cases[] = {
        {{2, 1.5, 1}, 0.9,
         {0.24997688608428688769, 0.82067783702918981771, 3.8220106414309171148, 0.092134010823007604096,
          0.74791924774987441206, -0.81705856604488412121}},
        {{0.5, 2.0, 3.0}, 0.6,
         {3.9656569073754807862, 0.22305598532318017945, 0.10749098782663411937, 0.90969427354921109275,
          0.46193205357026252155, 0.080008118660750411494}},
        {{4.7446, 1.0444, 33.6008}, 0.999,
         {0.044422274448410581484, 3.9466337228284257408, 0.0034058307937835026656, -0.11105436447327191918,
          0.010258930961368234412, -0.086374605708780267047}},
    };
    for (const auto& c : cases) {
        const FisherMatrix m = fisher_matrix(c.theta, c.p);
        CHECK(m.quadrature_converged);
        for (int k = 0; k < 6; ++k) {
            CHECK_THAT(entry(m.entries, k), WithinRel(c.expected[static_cast<std::size_t>(k)], 1e-8));
        }
    }
}

TEST_CASE("entries against graded Gauss-Legendre", "[fisher]")
{
    for (const Theta& t : {Theta{0.3, 0.7, 1.0}, Theta{2.0, 1.5, 1.0}, Theta{6.0, 3.0, 0.2}, Theta{1.0, 1.0, 5.0}}) {
        for (double p : {0.2, 0.8, 1.0}) {
            const FisherMatrix m = fisher_matrix(t, p);
            const auto ref = oracle::fisher_z_space({t.alpha, t.beta, t.sigma}, p);
            for (int k = 0; k < 6; ++k) {
                const double r = ref[static_cast<std::size_t>(k)];
                CHECK_THAT(entry(m.entries, k), WithinRel(r, 1e-7) || WithinAbs(r, 1e-12));
            }
        }
    }
}

TEST_CASE("change of variables to the x scale", "[fisher]")
{
    for (const Theta& t : {Theta{0.6, 1.3, 2.0}, Theta{2.0, 1.5, 1.0}, Theta{3.0, 0.5, 1.0}}) {
        for (double p : {0.5, 0.9}) {
            const FisherMatrix m = fisher_matrix(t, p);
            const auto ref = oracle::fisher_x_space({t.alpha, t.beta, t.sigma}, p);
            for (int k = 0; k < 6; ++k) {
                const double r = ref[static_cast<std::size_t>(k)];
                CHECK_THAT(entry(m.entries, k), WithinRel(r, 1e-6) || WithinAbs(r, 1e-12));
            }
        }
    }
}

TEST_CASE("I11 depends on alpha only", "[fisher]")
{
    const double a = fisher_entry(Axis::alpha, Axis::alpha, {1.5, 0.7, 2.0}, 0.7).value;
    const double b = fisher_entry(Axis::alpha, Axis::alpha, {1.5, 3.0, 9.0}, 0.7).value;
    CHECK_THAT(a, WithinRel(b, 1e-12));
}

TEST_CASE("information grows with p", "[fisher]")
{
    const Theta t{2.0, 1.5, 1.0};
    double prev = 0.0;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        const FisherMatrix m = fisher_matrix(t, p);
        CHECK(m.entries(2, 2) > prev);
        prev = m.entries(2, 2);
    }
}

TEST_CASE("symmetric positive definite on a grid", "[fisher]")
{
    int points = 0;
    for (double a : {0.3, 0.8, 1.5, 3.0, 6.0}) {
        for (double b : {0.5, 1.0, 1.7, 2.5, 4.0}) {
            for (double s : {0.5, 4.0}) {
                for (double p : {0.3, 0.6, 0.9, 1.0}) {
                    const FisherMatrix m = fisher_matrix({a, b, s}, p);
                    ++points;
                    CHECK(m.entries == m.entries.transpose());
                    CHECK(m.positive_definite);
                    REQUIRE(m.covariance.has_value());
                    CHECK((*m.covariance * m.entries - Matrix3::Identity()).norm() < 1e-6);
                }
            }
        }
    }
    CHECK(points == 200);
}

TEST_CASE("near-singular information withholds the covariance", "[fisher]")
{
    const FisherMatrix m = fisher_matrix({2.0, 1.5, 1e7}, 0.9);
    CHECK(m.near_singular);
    CHECK_FALSE(m.covariance.has_value());
    CHECK(m.condition_number > max_condition_number);
    CHECK_THROWS_AS(fisher_matrix({1, 1, 1}, 0.0), invalid_parameter);
    CHECK_THROWS_AS(fisher_matrix({1, 1, 1}, 1.2), invalid_parameter);
}

TEST_CASE("Wald intervals", "[fisher]")
{
    const auto s = apply_type2_censoring({"sim", ewd_sample({2.0, 1.5, 1.0}, 400, 43), ""}, CensoringSpec::observed(320));
    const FitResult f = fit_backfitting(s, {});
    REQUIRE(f.converged);

    const auto zero = asymptotic_ci(f, s, 0.0);
    for (const auto& iv : zero.intervals) {
        CHECK(iv.lower == iv.estimate);
        CHECK(iv.upper == iv.estimate);
    }

    const auto ci = asymptotic_ci(f, s, 0.95);
    CHECK_THAT(ci.p, WithinRel(0.8, 1e-15));
    const Matrix3 cov = *fisher_matrix(f.theta_hat, 0.8).covariance;
    for (int k = 0; k < 3; ++k) {
        const auto& iv = ci.intervals[static_cast<std::size_t>(k)];
        const double se = std::sqrt(cov(k, k) / 400.0);
        CHECK_THAT(iv.standard_error, WithinRel(se, 1e-12));
        CHECK_THAT(iv.upper - iv.estimate, WithinRel(1.959963984540054 * se, 1e-9));
        CHECK(iv.lower >= 0.0);
    }
    CHECK_THROWS_AS(asymptotic_ci(f, s, 1.0), invalid_parameter);
}

TEST_CASE("EED intervals use the alpha-sigma block", "[fisher]")
{
    const auto s = CensoredSample::complete(ewd_sample({2.0, 1.0, 1.0}, 300, 44));
    const FitResult f = fit_eed(s, {});
    const auto ci = asymptotic_ci(f, s, 0.95);
    CHECK(ci.intervals[1].standard_error == 0.0);
    CHECK(ci.intervals[1].lower == 1.0);
    CHECK(ci.intervals[0].standard_error > 0.0);
    CHECK(ci.intervals[2].standard_error > 0.0);
}

TEST_CASE("likelihood-ratio test of beta = 1", "[fisher][data]")
{
    if (!benchmark_available(Benchmark::ball_bearings) || !benchmark_available(Benchmark::carbon_fibre)) {
        SKIP("benchmark data not found");
    }
    const auto bb = CensoredSample::complete(load_benchmark(Benchmark::ball_bearings).values);
    const LrtResult a = lrt_beta_equals_one(bb, {});
    CHECK_THAT(a.statistic, WithinAbs(0.0044, 0.01));
    CHECK(a.p_value > 0.05);
    CHECK_FALSE(a.optimization_failure);

    const auto cf = CensoredSample::complete(load_benchmark(Benchmark::carbon_fibre).values);
    const LrtResult b = lrt_beta_equals_one(cf, {});
    CHECK_THAT(b.statistic, WithinAbs(9.7006, 0.01));
    CHECK(b.p_value < 0.01);
    const double chi = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1.0), b.statistic));
    CHECK_THAT(b.p_value, WithinRel(chi, 1e-12));
}
