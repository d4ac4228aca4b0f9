#pragma once

// Exceptions and extended-real arithmetic shared by every module.
//
// Values live in [0, +inf]. The conventions 0 * inf = 0, 0 / 0 = 0 and
// a^0 = 1 (for every a in [0, inf]) are applied by the helpers below so that
// callers never produce NaN from legitimate inputs.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace copson {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Precondition violation or malformed input (CLI exit code 2).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its tolerance (CLI exit code 3).
/// The best available estimate travels with the exception.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, double partial, double abs_error)
        : std::runtime_error(what), partial_(partial), abs_error_(abs_error) {}

    double partial() const noexcept { return partial_; }
    double abs_error() const noexcept { return abs_error_; }

private:
    double partial_;
    double abs_error_;
};

/// 0 * inf = 0.
inline double xmul(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

/// 0 / 0 = 0; x / 0 = inf for x > 0; inf / inf is rejected upstream.
inline double xdiv(double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return kInf;
    return a / b;
}

/// x^e on [0, inf] with a^0 = 1, 0^(-e) = inf, inf^(-e) = 0.
inline double xpow(double x, double e) {
    if (e == 0.0) return 1.0;
    if (x == 0.0) return e > 0.0 ? 0.0 : kInf;
    if (std::isinf(x)) return e > 0.0 ? kInf : 0.0;
    if (e == 1.0) return x;
    return std::pow(x, e);
}

inline bool is_finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace copson
