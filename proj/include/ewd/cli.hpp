#pragma once

// Command implementations behind tools/ewd_cli. Each command returns its JSON
// report, optional CSV text and the process exit code, so the commands can be
// tested without spawning a process.

#include "ewd/datasets.hpp"
#include "ewd/fisher.hpp"
#include "ewd/hazard_shape.hpp"
#include "ewd/mle.hpp"
#include "ewd/optimize.hpp"
#include "ewd/report.hpp"
#include "ewd/simulation.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ewd::cli {

using report::json;

enum ExitCode : int { ok = 0, usage = 1, data = 2, nonconvergence = 3 };

struct Outcome {
    json report;
    int exit_code = ok;
    std::string csv;
};

/// Thrown for flag combinations the parser cannot reject on its own.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Common {
    std::vector<std::string> argv;
    bool timing = false;
};

inline json error_report(std::string_view kind, std::string_view message, int code)
{
    return {{"schema_version", report::schema_version},
            {"error", {{"kind", kind}, {"message", message}}},
            {"exit_code", code}};
}

/// Map an exception from a module to (kind, exit code).
inline std::pair<std::string, int> classify_exception(const std::exception& e)
{
    if (dynamic_cast<const data_error*>(&e)) {
        return {"data", data};
    }
    if (dynamic_cast<const usage_error*>(&e) || dynamic_cast<const invalid_parameter*>(&e) ||
        dynamic_cast<const domain_error*>(&e)) {
        return {"usage", usage};
    }
    if (dynamic_cast<const numerical_error*>(&e)) {
        return {"numerical", nonconvergence};
    }
    return {"internal", nonconvergence};
}

namespace detail {

inline json header(std::string_view command, const Common& common)
{
    return {{"schema_version", report::schema_version},
            {"command", command},
            {"arguments", common.argv}};
}

inline void finish(json& j, const Common& common, std::chrono::steady_clock::time_point start)
{
    j["digest"] = report::digest(j);
    json run = {{"timestamp", report::utc_timestamp()}};
    if (common.timing) {
        run["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    j["run"] = std::move(run);
}

/// A relative path that does not exist is looked up in data_directory().
inline std::filesystem::path resolve_data_path(const std::filesystem::path& path)
{
    std::error_code ec;
    if (path.is_relative() && !std::filesystem::exists(path, ec)) {
        const auto alt = data_directory() / path;
        if (std::filesystem::exists(alt, ec)) {
            return alt;
        }
    }
    return path;
}

} // namespace detail

struct DataOptions {
    std::string path;
    std::string column;           ///< header name; empty selects column_index
    std::size_t column_index = 0;
    char delimiter = ',';
    std::optional<double> censor_rate;
    std::optional<long long> r;
    RoundingRule rounding = RoundingRule::round;
};

struct LoadedData {
    std::filesystem::path path;
    Dataset dataset;
    CensoredSample sample;
    json input;
};

inline LoadedData load_data(const DataOptions& o)
{
    if (o.censor_rate && o.r) {
        throw usage_error("--censor-rate and --r are mutually exclusive");
    }
    if (o.r && *o.r < 1) {
        throw usage_error("--r must be at least 1, got " + std::to_string(*o.r));
    }
    const auto path = detail::resolve_data_path(o.path);
    CsvOptions csv;
    csv.delimiter = o.delimiter;
    if (!o.column.empty()) {
        csv.column = o.column;
    } else {
        csv.column = o.column_index;
    }
    Dataset d = load_csv(path, csv);
    const CensoringSpec spec = o.r ? CensoringSpec::observed(static_cast<std::size_t>(*o.r))
                                   : CensoringSpec::at_rate(o.censor_rate.value_or(0.0), o.rounding);
    if (o.r && static_cast<std::size_t>(*o.r) > d.values.size()) {
        throw usage_error("--r " + std::to_string(*o.r) + " exceeds the sample size " +
                          std::to_string(d.values.size()));
    }
    CensoredSample s = apply_type2_censoring(d, spec);
    json censoring = o.r ? json{{"r", *o.r}}
                         : json{{"rate", o.censor_rate.value_or(0.0)}, {"rounding", to_string(o.rounding)}};
    json input = {{"path", path.string()},
                  {"name", d.name},
                  {"fnv1a64", report::file_digest(path)},
                  {"n", s.n_total()},
                  {"r", s.r()},
                  {"censoring", std::move(censoring)}};
    return {path, std::move(d), std::move(s), std::move(input)};
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
    DataOptions data;
    Family family = Family::ewd;
    bool check = false;
    bool fisher = false;
    double level = 0.95;
    bool trace = false;
    FitConfig config;
};

inline Outcome cmd_fit(const FitOptions& o, const Common& common = {})
{
    const auto start = std::chrono::steady_clock::now();
    o.config.validate();
    if (!(o.level >= 0.0 && o.level < 1.0)) {
        throw usage_error("--level must lie in [0, 1)");
    }
    LoadedData in = load_data(o.data);

    Outcome out;
    json j = detail::header("fit", common);
    j["input"] = in.input;
    j["config"] = report::to_json(o.config);
    const FitResult result = fit(in.sample, o.family, o.config, o.check);
    j["fit"] = report::to_json(result, o.trace);
    if (o.check) {
        const FitResult bf = o.family == Family::eed ? fit_eed(in.sample, o.config)
                                                     : fit_backfitting(in.sample, o.config);
        const FitResult direct = o.family == Family::eed ? fit_direct(in.sample, o.config, 1.0)
                                                         : fit_direct(in.sample, o.config);
        j["cross_check"] = {{"backfit_loglik", bf.loglik},
                            {"direct_loglik", direct.loglik},
                            {"abs_difference", std::abs(bf.loglik - direct.loglik)},
                            {"tolerance", agreement_tolerance},
                            {"agree", std::abs(bf.loglik - direct.loglik) < agreement_tolerance},
                            {"direct", report::to_json(direct)}};
    }
    if (o.fisher) {
        try {
            const ConfidenceIntervals ci = asymptotic_ci(result, in.sample, o.level);
            j["fisher"] = report::to_json(ci.fisher);
            j["confidence_intervals"] = report::to_json(ci);
        } catch (const numerical_error& e) {
            j["fisher"] = report::to_json(fisher_matrix(result.theta_hat, static_cast<double>(in.sample.r()) /
                                                                            static_cast<double>(in.sample.n_total())));
            j["confidence_intervals"] = {{"error", e.what()}};
        }
        j["lrt"] = report::to_json(lrt_beta_equals_one(in.sample, o.config));
    }
    out.exit_code = result.converged ? ok : nonconvergence;
    detail::finish(j, common, start);
    out.report = std::move(j);
    return out;
}

// ---------------------------------------------------------------------------
// shape

struct ShapeOptions {
    double alpha = 1.0;
    double beta = 1.0;
    bool scan = false;
    ScanOptions scan_options;
};

inline Outcome cmd_shape(const ShapeOptions& o, const Common& common = {})
{
    const auto start = std::chrono::steady_clock::now();
    const ShapeReport s = classify_shape(o.alpha, o.beta, o.scan_options);
    Outcome out;
    json j = detail::header("shape", common);
    j["alpha"] = o.alpha;
    j["beta"] = o.beta;
    j["result"] = report::to_json(s);
    if (o.scan) {
        std::ostringstream os;
        write_csv(os, s.scan);
        out.csv = os.str();
    }
    detail::finish(j, common, start);
    out.report = std::move(j);
    return out;
}

// ---------------------------------------------------------------------------
// surface

struct GridAxis {
    std::string name;  ///< alpha, beta or sigma
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 1;

    double at(std::size_t k) const
    {
        return points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    }
};

/// "name:lo:hi:points".
inline GridAxis parse_axis(std::string_view text)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 4) {
        throw usage_error("grid axis must look like name:lo:hi:points, got '" + std::string(text) + "'");
    }
    GridAxis a;
    a.name = parts[0];
    if (a.name != "alpha" && a.name != "beta" && a.name != "sigma") {
        throw usage_error("grid axis name must be alpha, beta or sigma, got '" + a.name + "'");
    }
    try {
        std::size_t used = 0;
        a.lo = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("lo");
        a.hi = std::stod(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("hi");
        const long long pts = std::stoll(parts[3], &used);
        if (used != parts[3].size() || pts < 1) throw std::invalid_argument("points");
        a.points = static_cast<std::size_t>(pts);
    } catch (const std::logic_error&) {
        throw usage_error("cannot parse grid axis '" + std::string(text) + "'");
    }
    if (!(a.lo > 0.0) || !(a.hi >= a.lo) || !std::isfinite(a.hi)) {
        throw usage_error("grid axis '" + a.name + "' needs 0 < lo <= hi");
    }
    return a;
}

struct SurfaceOptions {
    DataOptions data;
    Family family = Family::eed;
    GridAxis x;
    GridAxis y;
    /// Value of the parameter not on the grid; empty = profile it out (EWD).
    std::optional<double> fixed;
    std::size_t max_cells = 250000;
    FitConfig config;
};

inline int axis_index(const std::string& name)
{
    return name == "alpha" ? 0 : name == "beta" ? 1 : 2;
}

/// Log-likelihood on a rectangular grid of two parameters. For EWD the third
/// parameter is fixed or maximized at each cell; EED fixes beta at 1.
inline Outcome cmd_surface(const SurfaceOptions& o, const Common& common = {})
{
    const auto start = std::chrono::steady_clock::now();
    o.config.validate();
    if (o.x.name == o.y.name) {
        throw usage_error("the two grid axes must be different parameters");
    }
    if (o.family == Family::eed && (o.x.name == "beta" || o.y.name == "beta")) {
        throw usage_error("EED surfaces are over alpha and sigma (beta is 1)");
    }
    const std::size_t cells = o.x.points * o.y.points;
    if (o.x.points > o.max_cells || o.y.points > o.max_cells || cells > o.max_cells) {
        throw usage_error("grid of " + std::to_string(o.x.points) + " x " + std::to_string(o.y.points) +
                          " cells exceeds the cap of " + std::to_string(o.max_cells));
    }
    LoadedData in = load_data(o.data);
    const int ix = axis_index(o.x.name);
    const int iy = axis_index(o.y.name);
    const int iz = 3 - ix - iy;
    static constexpr const char* names[] = {"alpha", "beta", "sigma"};

    const FitResult best_fit = fit(in.sample, o.family, o.config);
    const bool profiled = o.family == Family::ewd && !o.fixed;
    double third = o.family == Family::eed ? 1.0 : o.fixed.value_or(as_vector(best_fit.theta_hat)[iz]);
    if (o.fixed) {
        ewd::detail::require_positive(*o.fixed, "fixed parameter");
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "alpha,beta,sigma,loglik,loglik_kernel\n";
    double max_value = -std::numeric_limits<double>::infinity();
    Vector3 max_at = Vector3::Zero();
    const double constant = log_permutation_constant(in.sample.n_total(), in.sample.r());
    for (std::size_t i = 0; i < o.x.points; ++i) {
        for (std::size_t k = 0; k < o.y.points; ++k) {
            Vector3 t;
            t[ix] = o.x.at(i);
            t[iy] = o.y.at(k);
            t[iz] = third;
            double kernel;
            if (profiled) {
                Eigen::VectorXd w(3);
                w << std::log(t[0]), std::log(t[1]), std::log(t[2]);
                Eigen::VectorXd lo = w;
                Eigen::VectorXd hi = w;
                lo[iz] = std::log(iz == 1 ? o.config.beta_lo : 1e-8);
                hi[iz] = std::log(iz == 1 ? o.config.beta_hi : 1e8);
                auto fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
                    const Theta th{std::exp(v[0]), std::exp(v[1]), std::exp(v[2])};
                    const double value = log_likelihood_kernel(in.sample, th);
                    if (!std::isfinite(value)) {
                        return -std::numeric_limits<double>::infinity();
                    }
                    try {
                        const Vector3 s = score(in.sample, th);
                        g.resize(3);
                        g << th.alpha * s[0], th.beta * s[1], th.sigma * s[2];
                    } catch (const numerical_error&) {
                        return -std::numeric_limits<double>::infinity();
                    }
                    return value;
                };
                optimize::BoxOptions bo;
                bo.gradient_tolerance = 1e-7 * static_cast<double>(in.sample.r());
                const auto res = optimize::maximize_box(fg, w, lo, hi, bo);
                t[iz] = std::exp(res.x[iz]);
                kernel = res.value;
                third = t[iz];
            } else {
                kernel = log_likelihood_kernel(in.sample, as_theta(t));
            }
            const double full = kernel + constant;
            csv << t[0] << ',' << t[1] << ',' << t[2] << ',' << full << ',' << kernel << '\n';
            if (full > max_value) {
                max_value = full;
                max_at = t;
            }
        }
        if (profiled) {
            third = as_vector(best_fit.theta_hat)[iz];
        }
    }

    Outcome out;
    json j = detail::header("surface", common);
    j["input"] = in.input;
    j["family"] = to_string(o.family);
    j["grid"] = {{"x", {{"name", o.x.name}, {"lo", o.x.lo}, {"hi", o.x.hi}, {"points", o.x.points}}},
                 {"y", {{"name", o.y.name}, {"lo", o.y.lo}, {"hi", o.y.hi}, {"points", o.y.points}}},
                 {"third", {{"name", names[iz]},
                            {"mode", o.family == Family::eed ? "fixed" : profiled ? "profiled" : "fixed"},
                            {"value", profiled ? json(nullptr) : json(third)}}},
                 {"cells", cells}};
    j["grid_max"] = {{"theta", report::to_json(as_theta(max_at))}, {"loglik", max_value}};
    j["fit"] = report::to_json(best_fit);
    detail::finish(j, common, start);
    out.report = std::move(j);
    out.csv = csv.str();
    return out;
}

// ---------------------------------------------------------------------------
// simulate

inline Outcome cmd_simulate(const SimulationConfig& config, const Common& common = {})
{
    const auto start = std::chrono::steady_clock::now();
    const SimulationReport s = simulate(config);
    Outcome out;
    json j = detail::header("simulate", common);
    j["config"] = report::to_json(config.fit);
    j["result"] = report::to_json(s);
    out.exit_code = s.failure_cap_exceeded ? nonconvergence : ok;
    detail::finish(j, common, start);
    out.report = std::move(j);
    return out;
}

} // namespace ewd::cli
