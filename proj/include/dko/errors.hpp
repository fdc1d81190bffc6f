#pragma once

#include <stdexcept>
#include <string>

namespace dko {

// Base of every failure raised by the library. Precondition violations on
// plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A state function returned a non-finite value at some sample.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// An SDE or map integration produced a non-finite state.
class IntegrationError : public Error {
public:
    using Error::Error;
};

// Snapshot data carries no information (e.g. an all-zero psi).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

// Gram matrix too close to singular for the requested solve.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

// Any other numerical failure (eigensolver, residual check).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

// Bad configuration; `key` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace dko
