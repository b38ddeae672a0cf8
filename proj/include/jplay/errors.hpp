#pragma once

#include <stdexcept>
#include <string>

namespace jplay {

/// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
struct ParameterError : Error {
    using Error::Error;
};

/// Malformed or inconsistent user-supplied data (files, labels, shapes).
struct InputError : Error {
    using Error::Error;
};

struct ShapeError : InputError {
    using InputError::InputError;
};

/// File does not follow the expected on-disk format.
struct FormatError : InputError {
    using InputError::InputError;
};

/// Requested more directions than the data supports.
struct RankError : InputError {
    using InputError::InputError;
};

/// Stratified fold assignment impossible (a class is too small).
struct StratificationError : InputError {
    using InputError::InputError;
};

/// Numerical failure inside a solver or iteration.
struct NumericError : Error {
    using Error::Error;
};

struct SingularityError : NumericError {
    using NumericError::NumericError;
};

struct SolverError : NumericError {
    using NumericError::NumericError;
};

struct DivergenceError : NumericError {
    using NumericError::NumericError;
};

}  // namespace jplay
