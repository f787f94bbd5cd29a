#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fracsing {

enum class ErrorCode {
    InvalidArgument,
    OutOfRange,
    NonConvergence,
    NonFiniteEvaluation,
    NonIntegrable,
    DiagonalEvaluation,
    NonPositiveRadius,
    BadGeometry,
    QuadratureFailure,
    SingularMatrix,
    NonPositiveSolution,
    MaxIterExceeded,
    MonotonicityBroken,
    RegimeMismatch,
    TuningFailed,
    NonPositiveSample,
    WindowTooSmall,
    NonPositiveDefect,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Subdivision budget exhausted; carries the best available estimate.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double best_value, double best_error)
        : Error(ErrorCode::NonConvergence, what), best_value_(best_value), best_error_(best_error) {}

    double best_value() const noexcept { return best_value_; }
    double best_error() const noexcept { return best_error_; }

private:
    double best_value_;
    double best_error_;
};

/// Monotone iteration ran out of iterations; carries the last iterate.
class MaxIterError : public Error {
public:
    MaxIterError(const std::string& what, std::vector<double> last)
        : Error(ErrorCode::MaxIterExceeded, what), last_(std::move(last)) {}

    const std::vector<double>& last_iterate() const noexcept { return last_; }

private:
    std::vector<double> last_;
};

}  // namespace fracsing
