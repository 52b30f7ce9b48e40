#pragma once

#include <stdexcept>
#include <string>

namespace fedego {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File access or format problems (CLI exit code 3).
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input line; carries the 1-based line number.
class ParseError : public IoError {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Non-finite loss or activations (CLI exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Shapes of two operands disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace fedego
