#pragma once

#include <stdexcept>

namespace bmolab {

/// Thrown when an operation would exceed a configured work budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown for malformed experiment or integrand configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bmolab
