#pragma once

#include <stdexcept>
#include <string>

namespace causalad {

// Base class for everything this library throws on its own account.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input bytes (CSV cells, graph files, model files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input whose shape violates the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration, including bundle/graph mismatches.
class ConfigError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// A graph violates a structural precondition (cycle, self-loop).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// No consistent DAG extension exists for a PDAG.
class ExtensionError : public Error {
public:
    using Error::Error;
};

/// A conditional-independence test could not be evaluated.
class TestError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace causalad
