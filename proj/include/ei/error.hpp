#pragma once

#include <stdexcept>
#include <string>

namespace ei {

/// Base for every error raised by the library. The CLI maps subclasses to
/// exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, failed validation, shape mismatches.
class DataError : public Error {
public:
    using Error::Error;
};

/// A learner or ensemble failed to train (e.g. divergent optimization).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or call sequence by the caller.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A model archive does not match the expected schema.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace ei
