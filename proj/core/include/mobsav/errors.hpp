#pragma once

#include <stdexcept>
#include <string>

namespace mobsav {

/// Base class for all mobsav failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Linear solve failed (singular or near-singular system).
class SolverError : public Error {
public:
    using Error::Error;
};

/// A scheme update hit a degenerate quantity (singular r-denominator,
/// invalid mobility splitting, ill-posed symbol).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Bad configuration or malformed input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mobsav
