#pragma once

#include <stdexcept>
#include <limits>
#include <string>

namespace ewd {

/// A parameter outside its admissible range (non-positive shape or scale,
/// empty sample, bad tolerance, ...).
class invalid_parameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A variate outside the support of the function being evaluated.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Intermediate quantity underflowed or overflowed past recovery.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: I/O failure, parse error, non-positive lifetime.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_positive(double value, const char* name)
{
    if (!(value > 0.0) || value == std::numeric_limits<double>::infinity()) {
        throw invalid_parameter(std::string(name) + " must be positive and finite, got " +
                                std::to_string(value));
    }
}

} // namespace detail
} // namespace ewd
