#pragma once

#include <stdexcept>
#include <string>

namespace gphmc {

// Bad user input: unknown keys, out-of-range values, malformed files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solver failed to meet its residual contract. Carries the last
// residual so callers can decide between aborting and rejecting a proposal.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual(residual), iterations(iterations) {}
    double residual = 0.0;
    int iterations = 0;
};

// Non-finite values appeared where finite ones are required (overflowing
// kernel amplitudes, diverging fixed-point iterations, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gphmc
