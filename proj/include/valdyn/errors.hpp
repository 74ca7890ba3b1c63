#pragma once

#include <stdexcept>
#include <string>

namespace valdyn {

/// Bad argument or malformed input (shape mismatch, out-of-range parameter,
/// invalid policy, ...).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Fixed-point iteration exhausted its iteration cap before reaching the
/// requested certificate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::uint64_t iterations, double residual)
        : std::runtime_error(what), iterations(iterations), final_residual(residual) {}

    std::uint64_t iterations;
    double final_residual;
};

/// File-level failure: unreadable/unwritable path, missing fields, or a
/// content hash that does not match the payload.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace valdyn
