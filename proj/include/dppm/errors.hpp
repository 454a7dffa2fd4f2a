#pragma once

#include <stdexcept>
#include <string>

namespace dppm {

/// Invalid configuration: unknown problem kind, bad dimensions, malformed config text.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on a call argument was violated.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// The objective produced a non-finite value where a finite one is required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dppm
