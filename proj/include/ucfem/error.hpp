#pragma once

#include <stdexcept>
#include <string>

namespace ucfem {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid radii, orders, sizes or other violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// Factorization breakdown or a residual that misses its tolerance.
class SolverError : public Error {
public:
    SolverError(const std::string& what, long pivot = -1, double residual = -1.0)
        : Error(what), pivot_(pivot), residual_(residual) {}
    [[nodiscard]] long pivot() const noexcept { return pivot_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    long pivot_;
    double residual_;
};

}  // namespace ucfem

#define UCFEM_THROW_IF(cond, Exc, msg) \
    do {                               \
        if (cond) throw Exc(msg);      \
    } while (false)
