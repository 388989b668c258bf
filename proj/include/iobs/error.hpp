#pragma once

#include <stdexcept>
#include <string>

namespace iobs {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible matrix shapes or dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

// An eigenvalue computation did not converge.
class EigenFailure : public Error {
public:
    using Error::Error;
};

// Malformed input file (JSON syntax or schema).
class ParseError : public Error {
public:
    using Error::Error;
};

// A model violates one of its invariants.
class ModelError : public Error {
public:
    using Error::Error;
};

// Invalid or unsupported coordinate transformation.
class TransformError : public Error {
public:
    using Error::Error;
};

// Bad arguments to a synthesis routine (grids, scalars, brackets).
class SynthesisError : public Error {
public:
    using Error::Error;
};

// A simulated run left the region where its disturbance bound is valid.
class SimulationError : public Error {
public:
    using Error::Error;
};

} // namespace iobs
