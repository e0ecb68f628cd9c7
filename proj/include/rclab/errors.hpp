#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rclab {

/// Caller violated a precondition (dimension mismatch, bad grid, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad or missing configuration key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cholesky factorization hit a non-positive pivot.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(std::size_t pivot, const std::string& hint)
        : std::runtime_error("non-positive pivot at index " + std::to_string(pivot) +
                             (hint.empty() ? "" : "; " + hint)),
          pivot_(pivot) {}

    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Iterative estimator did not reach its tolerance.
class EstimationError : public std::runtime_error {
public:
    EstimationError(const std::string& what, double last_value)
        : std::runtime_error(what), last_value_(last_value) {}

    [[nodiscard]] double last_value() const noexcept { return last_value_; }

private:
    double last_value_;
};

/// Integration left the admissible region (non-finite or |r_i| above the guard).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(double time)
        : std::runtime_error("trajectory diverged at t=" + std::to_string(time)), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Reservoir construction failed for this realization.
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rclab
