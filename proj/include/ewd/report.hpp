#pragma once

// JSON serialization of results. Every report carries schema_version; the
// "run" object (timestamp, optional timing) is excluded from the digest so
// identical inputs give identical digests.

#include "ewd/datasets.hpp"
#include "ewd/fisher.hpp"
#include "ewd/hazard_shape.hpp"
#include "ewd/mle.hpp"
#include "ewd/simulation.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace ewd::report {

using json = nlohmann::ordered_json;

inline constexpr const char* schema_version = "1.0";

/// 64-bit FNV-1a.
class Fnv1a {
public:
    void update(const char* data, std::size_t size)
    {
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= static_cast<unsigned char>(data[i]);
            hash_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t value() const noexcept { return hash_; }
    std::string hex() const
    {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << hash_;
        return os.str();
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline std::string file_digest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open '" + path.string() + "'");
    }
    Fnv1a h;
    char buffer[4096];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
        h.update(buffer, static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Digest of the report with the "run" and "digest" members removed.
inline std::string digest(const json& report)
{
    json copy = report;
    copy.erase("run");
    copy.erase("digest");
    Fnv1a h;
    h.update(copy.dump());
    return h.hex();
}

inline json to_json(const Theta& t)
{
    return {{"alpha", t.alpha}, {"beta", t.beta}, {"sigma", t.sigma}};
}

inline json to_json(const Vector3& v)
{
    return json::array({v[0], v[1], v[2]});
}

inline json to_json(const Matrix3& m)
{
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        rows.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
    }
    return rows;
}

inline json to_json(const FitConfig& c)
{
    return {{"epsilon_outer", c.epsilon_outer},
            {"epsilon_inner", c.epsilon_inner},
            {"max_outer", c.max_outer},
            {"max_inner", c.max_inner},
            {"beta_init", c.beta_init},
            {"alpha_init", c.alpha_init},
            {"lambda_init", c.lambda_init},
            {"beta_bracket", json::array({c.beta_lo, c.beta_hi})},
            {"beta_scan_points", c.beta_scan_points},
            {"beta_tolerance", c.beta_tolerance},
            {"score_tolerance", c.score_tolerance}};
}

inline json to_json(const FitResult& f, bool with_trace = false)
{
    json j = {{"family", to_string(f.family)},
              {"method", to_string(f.method)},
              {"status", to_string(f.status)},
              {"converged", f.converged},
              {"theta_hat", to_json(f.theta_hat)}};
    if (f.family == Family::eed) {
        j["lambda_hat"] = std::pow(f.theta_hat.sigma, f.theta_hat.beta);
    }
    j["loglik"] = {{"full", f.loglik},
                   {"kernel", f.loglik_kernel},
                   {"neg_kernel", -f.loglik_kernel}};
    j["n"] = f.n;
    j["r"] = f.r;
    j["n_outer"] = f.n_outer;
    j["score_norm"] = f.score_norm;
    j["profile_history"] = f.profile_history;
    json inner = json::array();
    for (const auto& t : f.inner_trace) {
        json e = {{"beta", t.beta}, {"method", to_string(t.method)}, {"iterations", t.path.size()}};
        if (with_trace) {
            json path = json::array();
            for (const auto& [a, l] : t.path) {
                path.push_back(json::array({a, l}));
            }
            e["path"] = std::move(path);
        }
        inner.push_back(std::move(e));
    }
    j["inner_trace"] = std::move(inner);
    return j;
}

inline json to_json(const FisherMatrix& m)
{
    json j = {{"p", m.p},
              {"p_used", m.p_used},
              {"p_capped", m.p_capped},
              {"entries", to_json(m.entries)},
              {"quadrature_error", to_json(m.quadrature_error)},
              {"quadrature_converged", m.quadrature_converged},
              {"positive_definite", m.positive_definite},
              {"condition_number", m.condition_number},
              {"near_singular", m.near_singular}};
    j["covariance"] = m.covariance ? to_json(*m.covariance) : json(nullptr);
    return j;
}

inline json to_json(const ConfidenceIntervals& ci)
{
    static constexpr const char* names[] = {"alpha", "beta", "sigma"};
    json intervals = json::object();
    for (std::size_t k = 0; k < 3; ++k) {
        const Interval& iv = ci.intervals[k];
        intervals[names[k]] = {{"estimate", iv.estimate},
                               {"lower", iv.lower},
                               {"upper", iv.upper},
                               {"standard_error", iv.standard_error}};
    }
    return {{"level", ci.level}, {"p", ci.p}, {"intervals", std::move(intervals)}};
}

inline json to_json(const LrtResult& l)
{
    return {{"hypothesis", "beta = 1"},
            {"statistic", l.statistic},
            {"p_value", l.p_value},
            {"degrees_of_freedom", 1},
            {"optimization_failure", l.optimization_failure},
            {"loglik_ewd", l.ewd.loglik},
            {"loglik_eed", l.eed.loglik}};
}

inline json to_json(const ShapeReport& s)
{
    json changes = json::array();
    for (const auto& c : s.scan.sign_changes) {
        changes.push_back({{"z_lo", c.z_lo}, {"z_hi", c.z_hi}, {"direction", c.direction > 0 ? "+" : "-"}});
    }
    json j = {{"region", to_string(s.region.label)},
              {"shape", to_string(s.region.shape)},
              {"observed_shape", to_string(s.observed)},
              {"constant_hazard", s.region.constant_hazard},
              {"nominal", s.region.nominal},
              {"warning", s.warning}};
    if (s.region.shape == HazardShape::boundary) {
        j["boundary_direction"] = to_string(s.region.boundary_direction);
    }
    if (!s.note.empty()) {
        j["note"] = s.note;
    }
    j["scan"] = {{"points", s.scan.z_grid.size()},
                 {"offset_range", s.scan.offsets.empty()
                                      ? json(nullptr)
                                      : json::array({s.scan.offsets.front(), s.scan.offsets.back()})},
                 {"sign_changes", std::move(changes)}};
    return j;
}

inline json to_json(const SimulationReport& s)
{
    const SimulationConfig& c = s.config;
    json j = {{"theta", to_json(c.theta)},
              {"n", c.n},
              {"p", c.p},
              {"r", s.r},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"level", c.level},
              {"failure_cap", c.failure_cap},
              {"succeeded", s.succeeded},
              {"failed", s.failed},
              {"failure_cap_exceeded", s.failure_cap_exceeded}};
    const bool have = s.succeeded > 0;
    j["mean"] = have ? to_json(s.mean) : json(nullptr);
    j["bias"] = have ? to_json(s.bias) : json(nullptr);
    j["coverage"] = have ? json{{"alpha", s.coverage[0]}, {"beta", s.coverage[1]}, {"sigma", s.coverage[2]}}
                         : json(nullptr);
    j["empirical_covariance"] = s.succeeded >= 2 ? to_json(s.empirical_covariance) : json(nullptr);
    j["asymptotic_covariance"] = s.asymptotic_covariance ? to_json(*s.asymptotic_covariance) : json(nullptr);
    j["relative_difference"] = s.relative_difference ? to_json(*s.relative_difference) : json(nullptr);
    j["failures"] = s.failure_messages;
    return j;
}

} // namespace ewd::report
