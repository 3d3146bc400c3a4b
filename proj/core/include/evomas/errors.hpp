#pragma once

#include <stdexcept>
#include <string>

namespace evomas {

/// Base class for all evomas errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix/vector dimensions do not agree.
struct ShapeError : Error {
    using Error::Error;
};

/// An input violates a documented precondition (bad probability vector,
/// repeated index, malformed plan, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// A hyperparameter is outside its legal range (temperature <= 0, ...).
struct ParameterError : Error {
    using Error::Error;
};

/// A vector required to have positive norm is (numerically) zero.
struct DegenerateVectorError : Error {
    using Error::Error;
};

/// An exact/brute-force routine was asked to run past its instance bound.
struct CapacityError : Error {
    using Error::Error;
};

/// An operation was applied to a task state that cannot accept it
/// (e.g. executing a workflow on a terminal state).
struct StateError : Error {
    using Error::Error;
};

/// Configuration file problems: unknown keys, unparseable values.
struct ConfigError : Error {
    using Error::Error;
};

/// Checkpoint file problems: truncation, hash mismatch, bad header.
struct CheckpointError : Error {
    using Error::Error;
};

} // namespace evomas
