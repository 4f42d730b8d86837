#pragma once

#include <stdexcept>
#include <string>

namespace mmpir {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad parameters, mixed fields,
/// mismatched lengths).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Multiplicative inverse of zero.
class DivisionByZeroError : public UsageError {
public:
    using UsageError::UsageError;
};

/// A code was requested whose length does not fit in the field.
class FieldTooSmallError : public UsageError {
public:
    using UsageError::UsageError;
};

/// A linear system had no unique solution.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Fewer known symbols than the code dimension.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Known symbols are not consistent with any codeword.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// An internal protocol invariant failed during decoding; indicates
/// corrupted or mismatched answers rather than caller misuse.
class ProtocolViolationError : public Error {
public:
    using Error::Error;
};

/// A received query does not validate against the server's library.
class MalformedQueryError : public Error {
public:
    using Error::Error;
};

/// An exhaustive enumeration would exceed its size guard.
class EnumerationLimitError : public Error {
public:
    using Error::Error;
};

/// Socket, framing, or peer failure.
class NetworkError : public Error {
public:
    using Error::Error;
};

} // namespace mmpir
