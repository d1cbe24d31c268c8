#pragma once

// Hazard-shape classification for EWD(alpha, beta, sigma).
//
// The (alpha, beta) quadrant splits along beta = 1 and alpha*beta = 1:
//
//   I   beta >= 1, alpha*beta >= 1   increasing
//   II  beta <= 1, alpha*beta <= 1   decreasing
//   III beta <  1, alpha*beta >  1   unimodal
//   IV  beta >  1, alpha*beta <  1   bathtub
//
// With z = exp((x/sigma)^beta) the derivative h'(x) has the sign of
//
//   s(z) = beta z ln z [(z-1)^a + (a - z) z^(a-1)] + (beta-1)(z-1)[z^a - (z-1)^a].
//
// Scans work with the offset v = z - 1 and the scaled function
// s(z) / z^alpha = beta ln z * D + (beta - 1) v B, where
//   B = 1 - (1 - 1/z)^alpha,   D = ((1 - 1/z)^alpha - 1 + alpha/z) * z.
// That form never overflows and resolves sign changes that sit extremely
// close to z = 1 (they do when alpha is small in region IV).

#include "ewd/distribution.hpp"
#include "ewd/error.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ewd {

enum class Region { I, II, III, IV };

enum class HazardShape {
    monotone_increasing,
    monotone_decreasing,
    unimodal,
    bathtub,
    boundary,
};

inline std::string_view to_string(Region r)
{
    switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
    }
    return "?";
}

inline std::string_view to_string(HazardShape s)
{
    switch (s) {
    case HazardShape::monotone_increasing: return "monotone-increasing";
    case HazardShape::monotone_decreasing: return "monotone-decreasing";
    case HazardShape::unimodal: return "unimodal";
    case HazardShape::bathtub: return "bathtub";
    case HazardShape::boundary: return "boundary";
    }
    return "?";
}

struct ShapeRegion {
    Region label = Region::I;
    HazardShape shape = HazardShape::monotone_increasing;
    /// Direction of the hazard on a boundary line (beta = 1 or alpha*beta = 1).
    HazardShape boundary_direction = HazardShape::monotone_increasing;
    /// alpha = beta = 1: exponential, constant hazard.
    bool constant_hazard = false;
    /// Region IV is labelled bathtub from (alpha, beta) alone; see classify_shape.
    bool nominal = false;
};

/// |beta - 1| or |alpha*beta - 1| below this puts (alpha, beta) on a boundary.
inline constexpr double boundary_tolerance = 1e-12;

inline ShapeRegion classify_region(double alpha, double beta)
{
    detail::require_positive(alpha, "alpha");
    detail::require_positive(beta, "beta");
    const double ab = alpha * beta;
    const bool on_beta = std::abs(beta - 1.0) < boundary_tolerance;
    const bool on_ab = std::abs(ab - 1.0) < boundary_tolerance;

    ShapeRegion out;
    if (on_beta || on_ab) {
        out.shape = HazardShape::boundary;
        out.constant_hazard = on_beta && on_ab;
        // Adjacent monotone region: beta = 1 with alpha > 1 and alpha*beta = 1
        // with beta > 1 both border region I; the remaining lines border II.
        const bool increasing = on_beta ? (ab > 1.0 && !on_ab) : (beta > 1.0);
        out.label = increasing ? Region::I : Region::II;
        out.boundary_direction =
            increasing ? HazardShape::monotone_increasing : HazardShape::monotone_decreasing;
        return out;
    }
    if (beta > 1.0 && ab > 1.0) {
        out.label = Region::I;
        out.shape = HazardShape::monotone_increasing;
    } else if (beta < 1.0 && ab < 1.0) {
        out.label = Region::II;
        out.shape = HazardShape::monotone_decreasing;
    } else if (beta < 1.0) {
        out.label = Region::III;
        out.shape = HazardShape::unimodal;
    } else {
        out.label = Region::IV;
        out.shape = HazardShape::bathtub;
        out.nominal = true;
    }
    out.boundary_direction = out.shape;
    return out;
}

namespace detail {

// ((1 - t)^alpha - 1 + alpha t) / t, exact in the factor (alpha - 1) for
// small t where the direct form cancels.
inline double shape_d_term(double t, double log_one_minus_t, double alpha)
{
    if (t < 0.25) {
        // sum_{k>=2} c_k t^(k-1) with c_k = C(alpha, k) (-1)^k
        double coeff = alpha * (alpha - 1.0) / 2.0;
        double power = t;
        double sum = coeff * power;
        for (int k = 2; k < 200; ++k) {
            coeff *= -(alpha - k) / (k + 1.0);
            power *= t;
            const double term = coeff * power;
            sum += term;
            if (std::abs(term) <= 1e-17 * std::abs(sum)) {
                break;
            }
        }
        return sum;
    }
    const double e = std::exp(alpha * log_one_minus_t);
    return (e - 1.0 + alpha * t) / t;
}

} // namespace detail

/// s(z) / z^alpha as a function of the offset v = z - 1 > 0.
inline double s_scaled_from_offset(double v, double alpha, double beta)
{
    // t = 1/z, 1 - t = v / (1 + v)
    const double log1p_v = std::log1p(v);
    const double t = 1.0 / (1.0 + v);
    const double log_one_minus_t = std::log(v) - log1p_v;
    const double d = detail::shape_d_term(t, log_one_minus_t, alpha);
    const double b = -std::expm1(alpha * log_one_minus_t);
    return beta * log1p_v * d + (beta - 1.0) * v * b;
}

/// s(z) for z > 1. The value can overflow to +-inf for large z^alpha; its sign
/// is always meaningful.
inline double s_of_z(double z, double alpha, double beta)
{
    detail::require_positive(alpha, "alpha");
    detail::require_positive(beta, "beta");
    if (!(z > 1.0) || std::isinf(z)) {
        throw domain_error("s(z) is defined for z > 1, got " + std::to_string(z));
    }
    const double scaled = s_scaled_from_offset(z - 1.0, alpha, beta);
    if (scaled == 0.0) {
        return 0.0;
    }
    return scaled * std::exp(alpha * std::log(z));
}

struct SignChange {
    double z_lo = 0.0;
    double z_hi = 0.0;
    /// +1 for a change from negative to positive, -1 for positive to negative.
    int direction = 0;
};

struct SignScan {
    /// Grid offsets z - 1, strictly increasing and positive. Stored alongside
    /// z because z itself rounds to 1 for offsets below machine epsilon.
    std::vector<double> offsets;
    std::vector<double> z_grid;
    /// s(z) / z^alpha on the grid; same sign as s(z).
    std::vector<double> s_values;
    std::vector<SignChange> sign_changes;

    int count(int direction) const
    {
        int n = 0;
        for (const auto& c : sign_changes) {
            n += (c.direction == direction) ? 1 : 0;
        }
        return n;
    }
};

struct ScanOptions {
    double z_max = 1e6;
    int n_points = 4096;
    /// Smallest offset z - 1 on the grid.
    double offset_min = 1e-12;
    /// Widen [offset_min, z_max] until both tails of s have reached their
    /// asymptotic sign (see scan_range).
    bool auto_extend = true;
};

/// Offsets [v_lo, v_hi] wide enough that s has its limiting sign at both ends.
///
/// Near z = 1, s/z^a ~ v (alpha beta - 1 + v^alpha): the sign settles once
/// v^alpha << |1 - alpha beta|. For large z, s/z^a ~ alpha (beta - 1) +
/// beta alpha (alpha - 1) ln z / (2 z): the sign settles once z / ln z >>
/// beta |alpha - 1| / (2 |beta - 1|).
inline std::pair<double, double> scan_range(double alpha, double beta, const ScanOptions& options)
{
    double log_lo = std::log(options.offset_min);
    double hi = options.z_max - 1.0;
    if (options.auto_extend) {
        const double ab_gap = std::abs(alpha * beta - 1.0);
        if (ab_gap > boundary_tolerance) {
            const double log_needed = std::log(1e-2 * ab_gap) / alpha;
            log_lo = std::max(std::min(log_lo, log_needed), std::log(1e-300));
        }
        const double b_gap = std::abs(beta - 1.0);
        if (b_gap > boundary_tolerance) {
            const double k = 100.0 * beta * std::abs(alpha - 1.0) / (2.0 * b_gap);
            if (k > 1.0) {
                double z = std::max(std::exp(1.0), k * std::log(std::max(k, std::exp(1.0))));
                for (int i = 0; i < 50; ++i) {
                    z = k * std::log(z);
                }
                hi = std::max(hi, std::min(z, 1e300));
            }
        }
    }
    return {std::exp(log_lo), hi};
}

/// Evaluate s on a grid with log-spaced offsets z - 1 and record sign changes.
inline SignScan sign_scan(double alpha, double beta, const ScanOptions& options)
{
    detail::require_positive(alpha, "alpha");
    detail::require_positive(beta, "beta");
    if (!(options.z_max > 1.0)) {
        throw invalid_parameter("z_max must exceed 1");
    }
    if (options.n_points < 2) {
        throw invalid_parameter("a sign scan needs at least 2 points");
    }
    if (!(options.offset_min > 0.0) || options.offset_min >= options.z_max - 1.0) {
        throw invalid_parameter("offset_min must lie in (0, z_max - 1)");
    }
    const auto [v_lo, v_hi] = scan_range(alpha, beta, options);
    const auto n = static_cast<std::size_t>(options.n_points);
    const double log_lo = std::log(v_lo);
    const double step = (std::log(v_hi) - log_lo) / static_cast<double>(n - 1);

    SignScan scan;
    scan.offsets.reserve(n);
    scan.z_grid.reserve(n);
    scan.s_values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = (i + 1 == n) ? v_hi : std::exp(log_lo + step * static_cast<double>(i));
        scan.offsets.push_back(v);
        scan.z_grid.push_back(1.0 + v);
        scan.s_values.push_back(s_scaled_from_offset(v, alpha, beta));
    }

    // Zeros are skipped: a change is recorded between the last nonzero value
    // and the next nonzero value of opposite sign.
    int last_sign = 0;
    double last_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = scan.s_values[i];
        const int sign = (s > 0.0) - (s < 0.0);
        if (sign == 0) {
            continue;
        }
        if (last_sign != 0 && sign != last_sign) {
            scan.sign_changes.push_back({last_z, scan.z_grid[i], sign});
        }
        last_sign = sign;
        last_z = scan.z_grid[i];
    }
    return scan;
}

inline SignScan sign_scan(double alpha, double beta, double z_max, int n_points)
{
    ScanOptions options;
    options.z_max = z_max;
    options.n_points = n_points;
    return sign_scan(alpha, beta, options);
}

/// Region label together with the shape the sign scan actually shows.
struct ShapeReport {
    ShapeRegion region;
    SignScan scan;
    HazardShape observed = HazardShape::monotone_increasing;
    /// Set when the scan contradicts the nominal region-IV bathtub label.
    bool warning = false;
    std::string note;
};

/// Shape implied by a scan alone.
inline HazardShape shape_from_scan(const SignScan& scan)
{
    const auto& ch = scan.sign_changes;
    if (ch.empty()) {
        double first = 0.0;
        for (double s : scan.s_values) {
            if (s != 0.0) {
                first = s;
                break;
            }
        }
        if (first == 0.0) {
            return HazardShape::boundary; // identically zero: constant hazard
        }
        return first > 0.0 ? HazardShape::monotone_increasing : HazardShape::monotone_decreasing;
    }
    if (ch.size() == 1) {
        return ch.front().direction < 0 ? HazardShape::unimodal : HazardShape::bathtub;
    }
    return ch.front().direction > 0 ? HazardShape::bathtub : HazardShape::unimodal;
}

inline ShapeReport classify_shape(double alpha, double beta, const ScanOptions& options = {})
{
    ShapeReport report;
    report.region = classify_region(alpha, beta);
    report.scan = sign_scan(alpha, beta, options);
    report.observed = shape_from_scan(report.scan);
    if (report.region.label == Region::IV && report.region.shape == HazardShape::bathtub &&
        report.scan.count(+1) == 0) {
        report.warning = true;
        report.region.shape = report.observed;
        report.note = "no negative-to-positive sign change found on the scan grid; "
                      "shape downgraded to the observed monotone label";
    }
    return report;
}

/// Hazard samples on x_k = k * x_max / n_points, k = 1..n_points.
inline std::vector<std::pair<double, double>> hazard_curve(const Theta& theta, double x_max,
                                                           int n_points)
{
    validate(theta);
    if (!(x_max > 0.0) || std::isinf(x_max)) {
        throw invalid_parameter("x_max must be positive and finite");
    }
    if (n_points < 1) {
        throw invalid_parameter("n_points must be at least 1");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(n_points));
    for (int k = 1; k <= n_points; ++k) {
        const double x = x_max * k / n_points;
        out.emplace_back(x, ewd_hazard(x, theta));
    }
    return out;
}

/// Two-column CSV with a header row.
inline void write_csv(std::ostream& os, std::string_view x_name, std::string_view y_name,
                      const std::vector<std::pair<double, double>>& rows)
{
    os << x_name << ',' << y_name << '\n';
    const auto old_precision = os.precision(17);
    for (const auto& [x, y] : rows) {
        os << x << ',' << y << '\n';
    }
    os.precision(old_precision);
}

inline void write_csv(std::ostream& os, const SignScan& scan)
{
    os << "z_minus_1,z,s_scaled\n";
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < scan.z_grid.size(); ++i) {
        os << scan.offsets[i] << ',' << scan.z_grid[i] << ',' << scan.s_values[i] << '\n';
    }
    os.precision(old_precision);
}

} // namespace ewd
