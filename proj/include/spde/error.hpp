#pragma once

#include <stdexcept>
#include <string>

namespace spde {

/// Base for failures that the command-line layer maps onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration or command-line input.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared during a simulation.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File-system or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace spde
