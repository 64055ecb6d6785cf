#pragma once

#include <stdexcept>
#include <string>

namespace caan {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible. Messages name both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Input is structurally valid but too small/degenerate for the operation.
struct DegenerateInputError : Error {
    using Error::Error;
};

// An API contract was violated (e.g. backward on a non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

// Invalid configuration or flag combination.
struct ConfigError : Error {
    using Error::Error;
};

// A loss or activation became non-finite. Message names the first
// offending component.
struct NanError : Error {
    using Error::Error;
};

// Rank correlation is undefined (zero rank variance).
struct UndefinedCorrelationError : Error {
    using Error::Error;
};

// File / format errors. Each failure mode is a distinct type so callers
// and tests can tell them apart.
struct IoError : Error {
    using Error::Error;
};
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct VersionError : IoError {
    using IoError::IoError;
};
struct TruncatedError : IoError {
    using IoError::IoError;
};
struct NonFiniteError : IoError {
    using IoError::IoError;
};
struct RangeError : IoError {
    using IoError::IoError;
};
struct BoundsError : IoError {
    using IoError::IoError;
};
struct OverlapError : IoError {
    using IoError::IoError;
};

// A video id appears in both the train and test side of a split.
struct LeakError : Error {
    using Error::Error;
};

}  // namespace caan
