#pragma once

#include <stdexcept>
#include <string>

namespace flowpat {

/// File-system and stream failures (missing files, unwritable paths).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated preconditions and malformed inputs (bad CSV rows, shape
/// mismatches, unknown labels, invalid configuration values).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A label token that does not belong to the scheme it was parsed under.
class UnknownLabelError : public ValidationError {
public:
    explicit UnknownLabelError(const std::string& what) : ValidationError(what) {}
};

/// Training produced a non-finite loss. Carries the offending epoch.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

} // namespace flowpat
