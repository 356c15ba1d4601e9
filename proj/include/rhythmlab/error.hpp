#pragma once

#include <stdexcept>
#include <string>

namespace rhythmlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or dimension disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Argument outside its mathematical domain (e.g. t outside (0,1)).
struct DomainError : Error {
    using Error::Error;
};

/// Invalid parameter value (e.g. non-positive scale).
struct ParamError : Error {
    using Error::Error;
};

/// Malformed input text (LRC lines, rule tables). Message carries location.
struct ParseError : Error {
    using Error::Error;
};

/// API misuse: a precondition the caller was responsible for.
struct ContractError : Error {
    using Error::Error;
};

/// NaN/Inf surfaced by a numeric computation.
struct NumericError : Error {
    using Error::Error;
};

/// Bad configuration (unknown keys, inconsistent values).
struct ConfigError : Error {
    using Error::Error;
};

/// Filesystem and serialization failures.
struct IoError : Error {
    using Error::Error;
};

} // namespace rhythmlab
