#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rmtsnr {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments: wrong shapes, violated preconditions, bad configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class SymmetryError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Failures of a numerical kernel on otherwise well-formed input.
class NumericError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double last_iterate, std::size_t iterations)
        : NumericError(what), last_iterate_(last_iterate), iterations_(iterations) {}

    double last_iterate() const noexcept { return last_iterate_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double last_iterate_;
    std::size_t iterations_;
};

class DefinitenessError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Malformed text input. Line and column are 1-based; 0 means unknown.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : ConfigError(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        if (line == 0) return what;
        std::string out = what + " (line " + std::to_string(line);
        if (column != 0) out += ", column " + std::to_string(column);
        return out + ")";
    }

    std::size_t line_;
    std::size_t column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace rmtsnr
