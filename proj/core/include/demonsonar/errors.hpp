#pragma once

#include <stdexcept>
#include <string>

namespace demonsonar {

/// Base class for all toolkit errors. The CLI maps subclasses onto exit
/// codes: ContractError / ValidationError / FormatError -> 2, IoError -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A precondition or configuration invariant was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Numeric data is unusable (non-finite samples, NaN features, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file's content is malformed or uses an unsupported encoding.
class FormatError : public Error {
public:
    using Error::Error;
};

/// The filesystem refused an operation (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace demonsonar
