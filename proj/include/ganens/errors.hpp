#pragma once

#include <stdexcept>
#include <string>

namespace ganens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

enum class LoadErrorKind {
    Io,
    BadMagic,
    Truncated,
    TrailingData,
    NonFinite,
    EmptyShape,
    Parse,
    DimMismatch,
    DuplicateId,
    Manifest,
};

/// Failure while reading or validating embedding files and manifests.
class LoadError : public Error {
public:
    LoadError(LoadErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    LoadErrorKind kind() const noexcept { return kind_; }

private:
    LoadErrorKind kind_;
};

class WriteError : public Error {
public:
    using Error::Error;
};

/// Linear algebra failed to converge or produced an unusable result.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace ganens
