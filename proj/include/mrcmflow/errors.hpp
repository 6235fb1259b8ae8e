#pragma once

#include <stdexcept>
#include <string>

namespace mrcmflow {

/// Bad user input: grid sizes, partitions, config files, file formats.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular systems, non-convergence, CFL violations.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Problem size exceeds a hard capacity guard.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mrcmflow
