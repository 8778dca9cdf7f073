#pragma once

#include <stdexcept>
#include <string>

namespace spatialqa {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a type invariant (non-orthonormal rotation, bad box, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class UnitError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class UnsupportedTaskError : public Error {
public:
    using Error::Error;
};

/// Generation gave up after its retry bound.
class GenerationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// Manifest or scene document failed schema validation.
class LoadError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Lookup of a tool name that is not registered.
class RegistryError : public Error {
public:
    using Error::Error;
};

/// A scripted chat client was called more times than it has responses.
class ScriptExhausted : public Error {
public:
    using Error::Error;
};

}  // namespace spatialqa
