#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace slowfast {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input. `field()` names the offending field as a dotted path
/// (e.g. "params.c2", "probes.width").
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Parameters outside the regime -a^2 b < c1 < c2 < 0 < c3 required by the
/// region-of-attraction results.
class RegimeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Two scheduled events land on the same grid point with no defined order.
class ScheduleConflict : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Stability classification requested exactly at a bifurcation value.
class BoundaryCase : public Error {
public:
    BoundaryCase(int index, double value)
        : Error("c" + std::to_string(index) + " = " + std::to_string(value) +
                " lies on a bifurcation boundary (-a^2 b or 0)"),
          index_(index), value_(value) {}

    int index() const noexcept { return index_; }
    double value() const noexcept { return value_; }

private:
    int index_;
    double value_;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A squared radius at or below the logarithm floor.
class DegenerateRadius : public Error {
public:
    using Error::Error;
};

} // namespace slowfast
