#pragma once

#include <stdexcept>
#include <string>

namespace ppboot {

// Root of every exception the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad caller input: sizes, ranges, unknown names.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Problems with input data rather than with how the library was called.
class DataError : public Error {
public:
    using Error::Error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : DataError(what), row_(row), column_(column) {}

    // 1-based data row (header excluded) and 1-based column.
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// The estimand cannot be computed on the data at hand, or a resampling
// procedure could not retain enough usable iterations.
class InferenceError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public InferenceError {
public:
    using InferenceError::InferenceError;
};

class BootstrapFailure : public InferenceError {
public:
    using InferenceError::InferenceError;
};

class TuningFailure : public InferenceError {
public:
    using InferenceError::InferenceError;
};

class TrainingError : public InferenceError {
public:
    TrainingError(const std::string& what, std::size_t fold)
        : InferenceError(what), fold_(fold) {}

    std::size_t fold() const noexcept { return fold_; }

private:
    std::size_t fold_;
};

class StudyError : public InferenceError {
public:
    StudyError(const std::string& what, std::string method)
        : InferenceError(what), method_(std::move(method)) {}

    const std::string& method() const noexcept { return method_; }

private:
    std::string method_;
};

} // namespace ppboot
