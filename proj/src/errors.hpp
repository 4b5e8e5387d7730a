#pragma once

#include <stdexcept>
#include <string>

namespace fhm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File or directory access failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A configuration file is missing, malformed, or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage was invoked before the stage it depends on.
class MissingDependency : public Error {
public:
    using Error::Error;
};

/// A numerical operation failed (singular system, factorization failure).
class NumericError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

} // namespace fhm
