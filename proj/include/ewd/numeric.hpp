#pragma once

// Small numerical kernels shared by the distribution, likelihood and fitting
// code: compensated summation and log-space tail helpers.

#include <cmath>
#include <limits>

namespace ewd {

/// Neumaier-compensated running sum. Summation order is the insertion order,
/// so results are reproducible bit-for-bit.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// log(1 - exp(a)) for a <= 0, accurate at both ends (Maechler's log1mexp).
inline double log1mexp(double a) noexcept
{
    if (a > 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (a > -0.6931471805599453) {
        return std::log(-std::expm1(a));
    }
    return std::log1p(-std::exp(a));
}

/// log(1 - exp(-u)) for u >= 0.
inline double log_one_minus_exp_neg(double u) noexcept { return log1mexp(-u); }

/// u / (e^u - 1), with the removable singularity at u = 0 filled in.
inline double u_over_expm1(double u) noexcept
{
    if (u == 0.0) {
        return 1.0;
    }
    if (u > 700.0) {
        return std::exp(std::log(u) - u);
    }
    return u / std::expm1(u);
}

} // namespace ewd
