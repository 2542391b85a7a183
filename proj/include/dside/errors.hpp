#pragma once

#include <stdexcept>
#include <string>

namespace dside {

/// Malformed or inconsistent caller input (bad dimensions, unknown ids, ...).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be parsed or failed validation.
class FormatError : public InputError {
public:
    using InputError::InputError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Not enough instances in a class for the requested statistic.
class InsufficientDataError : public InputError {
public:
    InsufficientDataError(std::string class_id, const std::string& what)
        : InputError(what), class_id_(std::move(class_id)) {}
    const std::string& class_id() const noexcept { return class_id_; }

private:
    std::string class_id_;
};

class UndefinedCorrelationError : public InputError {
public:
    using InputError::InputError;
};

/// An operation was requested before the session holds what it needs.
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitState = 3;
inline constexpr int kExitInternal = 4;

}  // namespace dside
