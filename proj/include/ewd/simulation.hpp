#pragma once

// Monte Carlo study of the censored MLE: sample, censor, fit, interval.

#include "ewd/datasets.hpp"
#include "ewd/distribution.hpp"
#include "ewd/fisher.hpp"
#include "ewd/mle.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

namespace ewd {

struct SimulationConfig {
    Theta theta{2.0, 1.5, 1.0};
    std::size_t n = 2000;
    double p = 0.8;               ///< observed fraction r/n
    std::size_t replicates = 1000;
    std::uint64_t seed = 20240601;
    double level = 0.95;
    unsigned threads = 1;
    double failure_cap = 0.05;    ///< fraction of failed replicates tolerated
    RoundingRule rounding = RoundingRule::round;
    FitConfig fit;
};

struct Replicate {
    std::uint64_t seed = 0;
    bool ok = false;
    Theta theta_hat;
    std::array<bool, 3> covered{};
    std::string failure;
};

struct SimulationReport {
    SimulationConfig config;
    std::size_t r = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    bool failure_cap_exceeded = false;
    Vector3 mean = Vector3::Zero();
    Vector3 bias = Vector3::Zero();
    /// Empirical covariance of sqrt(n) (theta_hat - theta).
    Matrix3 empirical_covariance = Matrix3::Zero();
    /// I_p(theta)^{-1} at the true parameter.
    std::optional<Matrix3> asymptotic_covariance;
    /// |empirical - asymptotic| / |asymptotic| entrywise.
    std::optional<Matrix3> relative_difference;
    Vector3 coverage = Vector3::Zero();
    std::vector<std::string> failure_messages;
};

/// SplitMix64 step: decorrelated per-replicate seeds from one master seed.
inline std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Replicate run_replicate(const SimulationConfig& config, std::size_t index, std::size_t r)
{
    Replicate rep;
    rep.seed = replicate_seed(config.seed, index);
    try {
        Dataset data{"replicate", ewd_sample(config.theta, config.n, rep.seed), ""};
        const CensoredSample sample = apply_type2_censoring(data, CensoringSpec::observed(r));
        const FitResult fit = fit_backfitting(sample, config.fit);
        if (!fit.converged) {
            rep.failure = "fit status " + std::string(to_string(fit.status));
            return rep;
        }
        rep.theta_hat = fit.theta_hat;
        const ConfidenceIntervals ci = asymptotic_ci(fit, sample, config.level);
        const Vector3 truth = as_vector(config.theta);
        for (std::size_t k = 0; k < 3; ++k) {
            rep.covered[k] = ci.intervals[k].lower <= truth[static_cast<Eigen::Index>(k)] &&
                             truth[static_cast<Eigen::Index>(k)] <= ci.intervals[k].upper;
        }
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.failure = e.what();
    }
    return rep;
}

/// Replicates are independent and indexed, so the report does not depend on
/// the number of threads.
inline SimulationReport simulate(const SimulationConfig& config)
{
    validate(config.theta);
    config.fit.validate();
    if (!(config.p > 0.0 && config.p <= 1.0)) {
        throw invalid_parameter("p must lie in (0, 1]");
    }
    if (config.n < 2) {
        throw invalid_parameter("n must be at least 2");
    }
    SimulationReport out;
    out.config = config;
    out.r = observed_count(config.n, 1.0 - config.p, config.rounding);
    if (config.replicates == 0) {
        return out;
    }

    std::vector<Replicate> reps(config.replicates);
    const unsigned workers =
        std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.replicates)));
    auto work = [&](unsigned id) {
        for (std::size_t i = id; i < reps.size(); i += workers) {
            reps[i] = run_replicate(config, i, out.r);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned id = 0; id < workers; ++id) {
            pool.emplace_back(work, id);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    const Vector3 truth = as_vector(config.theta);
    const double root_n = std::sqrt(static_cast<double>(config.n));
    std::vector<Vector3> scaled;
    for (const Replicate& rep : reps) {
        if (!rep.ok) {
            ++out.failed;
            if (out.failure_messages.size() < 20) {
                out.failure_messages.push_back("seed " + std::to_string(rep.seed) + ": " + rep.failure);
            }
            continue;
        }
        ++out.succeeded;
        const Vector3 est = as_vector(rep.theta_hat);
        out.mean += est;
        scaled.push_back(root_n * (est - truth));
        for (int k = 0; k < 3; ++k) {
            out.coverage[k] += rep.covered[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
        }
    }
    out.failure_cap_exceeded =
        static_cast<double>(out.failed) > config.failure_cap * static_cast<double>(config.replicates);

    const FisherMatrix info = fisher_matrix(config.theta, static_cast<double>(out.r) / static_cast<double>(config.n));
    out.asymptotic_covariance = info.covariance;
    if (out.succeeded == 0) {
        return out;
    }
    const double m = static_cast<double>(out.succeeded);
    out.mean /= m;
    out.bias = out.mean - truth;
    out.coverage /= m;
    if (out.succeeded >= 2) {
        Vector3 centre = Vector3::Zero();
        for (const Vector3& v : scaled) {
            centre += v;
        }
        centre /= m;
        for (const Vector3& v : scaled) {
            out.empirical_covariance += (v - centre) * (v - centre).transpose();
        }
        out.empirical_covariance /= (m - 1.0);
        if (out.asymptotic_covariance) {
            out.relative_difference =
                ((out.empirical_covariance - *out.asymptotic_covariance).cwiseAbs().array() /
                 out.asymptotic_covariance->cwiseAbs().array()).matrix();
        }
    }
    return out;
}

} // namespace ewd
