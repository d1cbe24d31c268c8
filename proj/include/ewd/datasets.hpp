#pragma once

// Lifetime data ingestion and type II censoring.

#include "ewd/error.hpp"
#include "ewd/likelihood.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#ifndef EWD_DEFAULT_DATA_DIR
#define EWD_DEFAULT_DATA_DIR "data"
#endif

namespace ewd {

struct Dataset {
    std::string name;
    std::vector<double> values;
    std::string source;

    std::size_t size() const noexcept { return values.size(); }
};

enum class HeaderMode { detect, present, absent };

struct CsvOptions {
    /// Column by header name or zero-based index.
    std::variant<std::size_t, std::string> column = std::size_t{0};
    char delimiter = ',';
    HeaderMode header = HeaderMode::detect;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delimiter)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delimiter, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

inline std::optional<double> parse_number(std::string_view field)
{
    if (field.empty()) {
        return std::nullopt;
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        return std::nullopt;
    }
    return value;
}

} // namespace detail

/// Read one numeric column. Blank lines and lines starting with '#' are
/// skipped. Diagnostics carry the 1-based line number of the file.
inline Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {})
{
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open '" + path.string() + "'");
    }
    Dataset data;
    data.name = path.stem().string();
    data.source = path.string();

    std::optional<std::size_t> column;
    if (const auto* index = std::get_if<std::size_t>(&options.column)) {
        column = *index;
    }
    const auto* wanted_name = std::get_if<std::string>(&options.column);
    bool first_row = true;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::string_view view = detail::trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto fields = detail::split(line, options.delimiter);
        const std::string where = path.string() + ":" + std::to_string(line_number);

        if (first_row) {
            first_row = false;
            bool is_header = options.header == HeaderMode::present;
            if (options.header == HeaderMode::detect) {
                is_header = wanted_name != nullptr ||
                            std::none_of(fields.begin(), fields.end(),
                                         [](std::string_view f) { return detail::parse_number(f).has_value(); });
            }
            if (is_header) {
                if (wanted_name) {
                    const auto it = std::find(fields.begin(), fields.end(), *wanted_name);
                    if (it == fields.end()) {
                        throw data_error(where + ": no column named '" + *wanted_name + "'");
                    }
                    column = static_cast<std::size_t>(it - fields.begin());
                }
                if (*column < fields.size() && !fields[*column].empty()) {
                    data.name = std::string(fields[*column]);
                }
                continue;
            }
            if (wanted_name) {
                throw data_error(where + ": column '" + *wanted_name + "' requested but the file has no header");
            }
        }

        if (*column >= fields.size()) {
            throw data_error(where + ": row has " + std::to_string(fields.size()) +
                             " field(s), column index " + std::to_string(*column) + " is missing");
        }
        const std::string_view field = fields[*column];
        const auto value = detail::parse_number(field);
        if (!value || !std::isfinite(*value)) {
            throw data_error(where + ": '" + std::string(field) + "' is not a finite number");
        }
        if (!(*value > 0.0)) {
            throw data_error(where + ": lifetime " + std::string(field) + " is not positive");
        }
        data.values.push_back(*value);
    }
    if (in.bad()) {
        throw data_error("read error on '" + path.string() + "'");
    }
    if (data.values.empty()) {
        throw data_error("'" + path.string() + "' contains no observations");
    }
    return data;
}

enum class RoundingRule { floor, round, ceil };

inline std::string_view to_string(RoundingRule rule)
{
    switch (rule) {
    case RoundingRule::floor: return "floor";
    case RoundingRule::round: return "round";
    case RoundingRule::ceil: return "ceil";
    }
    return "?";
}

inline RoundingRule parse_rounding_rule(std::string_view name)
{
    if (name == "floor") {
        return RoundingRule::floor;
    }
    if (name == "round") {
        return RoundingRule::round;
    }
    if (name == "ceil") {
        return RoundingRule::ceil;
    }
    throw invalid_parameter("unknown rounding rule '" + std::string(name) + "' (floor, round, ceil)");
}

/// Number of observed failures r for n units at censoring rate c. n(1 - c)
/// within 1e-9 of an integer counts as that integer, so 100 * (1 - 0.1) is
/// 90 under every rule.
inline std::size_t observed_count(std::size_t n, double rate, RoundingRule rule)
{
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw invalid_parameter("censoring rate must lie in [0, 1), got " + std::to_string(rate));
    }
    const double exact = static_cast<double>(n) * (1.0 - rate);
    const double nearest = std::round(exact);
    double r = nearest;
    if (std::abs(exact - nearest) > 1e-9 * std::max(1.0, exact)) {
        switch (rule) {
        case RoundingRule::floor: r = std::floor(exact); break;
        case RoundingRule::round: r = nearest; break;
        case RoundingRule::ceil: r = std::ceil(exact); break;
        }
    }
    if (r < 1.0) {
        throw invalid_parameter("censoring rate " + std::to_string(rate) + " leaves no observed failure out of " +
                                std::to_string(n));
    }
    return static_cast<std::size_t>(r);
}

/// Either an explicit number of observed failures or a censoring rate.
struct CensoringSpec {
    std::optional<std::size_t> r;
    double rate = 0.0;
    RoundingRule rounding = RoundingRule::round;

    static CensoringSpec observed(std::size_t r) { return {r, 0.0, RoundingRule::round}; }
    static CensoringSpec at_rate(double c, RoundingRule rule = RoundingRule::round)
    {
        return {std::nullopt, c, rule};
    }

    std::size_t resolve(std::size_t n) const
    {
        if (r) {
            if (*r < 1 || *r > n) {
                throw invalid_parameter("r must lie in [1, " + std::to_string(n) + "], got " + std::to_string(*r));
            }
            return *r;
        }
        return observed_count(n, rate, rounding);
    }
};

/// Sort ascending (stable, ties keep input order) and keep the first r.
inline CensoredSample apply_type2_censoring(const Dataset& data, const CensoringSpec& spec)
{
    if (data.values.empty()) {
        throw data_error("dataset '" + data.name + "' is empty");
    }
    for (double v : data.values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw data_error("dataset '" + data.name + "' contains a non-positive or non-finite lifetime");
        }
    }
    const std::size_t n = data.values.size();
    const std::size_t r = spec.resolve(n);
    std::vector<double> sorted = data.values;
    std::stable_sort(sorted.begin(), sorted.end());
    sorted.resize(r);
    return CensoredSample(std::move(sorted), n);
}

enum class Benchmark { ball_bearings, carbon_fibre };

struct BenchmarkInfo {
    std::string_view file;
    std::string_view name;
    std::string_view source;
    std::size_t expected_size;
};

inline BenchmarkInfo benchmark_info(Benchmark which)
{
    if (which == Benchmark::ball_bearings) {
        return {"ballbearings.csv", "ball bearings",
                "Lieblein and Zelen (1956), as analysed in Gupta and Kundu (2001), "
                "Biometrical Journal 43, 117-130; millions of revolutions to failure",
                23};
    }
    return {"carbon.csv", "carbon fibre",
            "Nichols and Padgett (2006), Quality and Reliability Engineering "
            "International 22, 141-151; breaking stress in GPa",
            100};
}

/// EWD_DATA_DIR when set and nonempty, otherwise the build-time default.
inline std::filesystem::path data_directory()
{
    if (const char* env = std::getenv("EWD_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return EWD_DEFAULT_DATA_DIR;
}

inline std::filesystem::path benchmark_path(Benchmark which)
{
    return data_directory() / benchmark_info(which).file;
}

inline bool benchmark_available(Benchmark which)
{
    std::error_code ec;
    return std::filesystem::is_regular_file(benchmark_path(which), ec);
}

inline Dataset load_benchmark(Benchmark which)
{
    const BenchmarkInfo info = benchmark_info(which);
    Dataset data = load_csv(benchmark_path(which));
    data.name = std::string(info.name);
    data.source = std::string(info.source);
    if (data.values.size() != info.expected_size) {
        throw data_error("benchmark '" + data.name + "' has " + std::to_string(data.values.size()) +
                         " values, expected " + std::to_string(info.expected_size));
    }
    return data;
}

} // namespace ewd
