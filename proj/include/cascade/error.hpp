#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cascade {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position` is the 0-based offset of the offending character.
class ParseError : public Error {
public:
    ParseError(std::size_t position, const std::string& message)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Non-finite intermediate during expression evaluation (division by zero, sqrt of a negative, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature ran out of its node budget before meeting the tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& message, double best_estimate, double error_estimate)
        : Error(message), best_(best_estimate), err_(error_estimate) {}

    [[nodiscard]] double bestEstimate() const noexcept { return best_; }
    [[nodiscard]] double errorEstimate() const noexcept { return err_; }

private:
    double best_;
    double err_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

/// Strip problem data violates the integral compatibility condition.
class SolvabilityError : public Error {
public:
    SolvabilityError(const std::string& message, double residual)
        : Error(message), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace cascade
