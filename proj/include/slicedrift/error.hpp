#pragma once

#include <stdexcept>
#include <string>

namespace slicedrift {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required column is absent or a feature's kind does not match.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell could not be parsed (carries the 1-based data row index).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row)
        : Error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Input too small or empty for the requested operation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Dataset has no misclassified rows, so weak slices are undefined.
class NoErrorsError : public Error {
public:
    using Error::Error;
};

/// detect_drift was given a slice set with no rules.
class EmptySliceSetError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a statistical primitive.
class DomainError : public Error {
public:
    using Error::Error;
};

/// force_different could not produce a changed column within the retry budget.
class DistortionImpossibleError : public Error {
public:
    DistortionImpossibleError(const std::string& msg, std::string column)
        : Error(msg), column_(std::move(column)) {}
    const std::string& column() const { return column_; }

private:
    std::string column_;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace slicedrift
