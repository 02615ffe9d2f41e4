#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gendir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed input: schema violations, dimension mismatches, non-finite values,
/// missing placeholders or tokens.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

/// A probe-result set does not cover every job it is analysed against.
class IncompleteResultsError : public Error {
public:
    IncompleteResultsError(std::size_t missing, std::string first_missing)
        : Error("incomplete probe results: " + std::to_string(missing) +
                " job(s) missing or failed (first: " + first_missing + ")"),
          missing_(missing), first_missing_(std::move(first_missing)) {}

    const char* kind() const noexcept override { return "incomplete"; }
    std::size_t missing() const noexcept { return missing_; }
    const std::string& first_missing() const noexcept { return first_missing_; }

private:
    std::size_t missing_;
    std::string first_missing_;
};

/// Correlation of a variable with zero variance.
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "undefined_correlation"; }
};

/// No sentence in the corpus contains the requested word.
class NoContextsError : public Error {
public:
    explicit NoContextsError(const std::string& word)
        : Error("no contexts found for word '" + word + "'"), word_(word) {}

    const char* kind() const noexcept override { return "no_contexts"; }
    const std::string& word() const noexcept { return word_; }

private:
    std::string word_;
};

} // namespace gendir
