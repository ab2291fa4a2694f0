#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pvqd {

/// Raised when an operation is asked for more than the dense backend can hold.
class CapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during an optimization. Carries where it happened.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string message, std::size_t time_step, std::size_t iteration, double value)
        : std::runtime_error(message + " (time step " + std::to_string(time_step) + ", iteration " +
                             std::to_string(iteration) + ", value " + std::to_string(value) + ")"),
          message_(std::move(message)), time_step_(time_step), iteration_(iteration), value_(value) {}

    std::size_t time_step() const noexcept { return time_step_; }
    std::size_t iteration() const noexcept { return iteration_; }
    double value() const noexcept { return value_; }

    NumericalError at_time_step(std::size_t step) const {
        return NumericalError(message_, step, iteration_, value_);
    }

private:
    std::string message_;
    std::size_t time_step_;
    std::size_t iteration_;
    double value_;
};

/// Every singular value of the tangent-space metric fell below the cutoff.
class DegenerateTangentSpaceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `field()` is a dotted path such as "pvqd.dt".
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& reason)
        : std::invalid_argument(field + ": " + reason), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An artifact lacks the data a requested figure table needs.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pvqd
