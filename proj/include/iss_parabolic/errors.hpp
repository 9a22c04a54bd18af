#pragma once

#include <stdexcept>
#include <string>

namespace issp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidField : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// The requested time step would break order preservation of the scheme.
class MonotonicityLoss : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// A step failed inside `simulate`; carries the time of the failing step.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, double t)
        : Error(what + " (at t=" + std::to_string(t) + ")"), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

class IncompatibleTrajectory : public Error {
public:
    using Error::Error;
};

/// No cutoff width makes the bracket admissible for the given state/input pair.
class IncompatibilityError : public Error {
public:
    using Error::Error;
};

class InapplicableEstimate : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class SynthesisError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace issp
