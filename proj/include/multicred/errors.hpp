#pragma once

#include <stdexcept>
#include <string>

namespace multicred {

/// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value is outside the domain an operation accepts.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Matrix or vector dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite numbers where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An object is used in a state that does not allow the call.
class StateError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure. Always names the path involved.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Remote service unreachable after retries.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Remote service answered with something that violates the wire contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace multicred
