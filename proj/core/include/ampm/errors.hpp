#pragma once

#include <stdexcept>
#include <string>

namespace ampm {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller asked for something the API does not offer (wrong model id for an
// operation, bad subcommand arguments, invalid split sizes).
struct UsageError : Error {
    using Error::Error;
};

// Bad configuration values (grid spans, truncation bounds, SDs).
struct ConfigError : Error {
    using Error::Error;
};

// Input data violates a precondition (negative interval, empty dataset,
// nonpositive yields under a log model).
struct DataError : Error {
    using Error::Error;
};

// Rank-deficient design; message names the collinear column.
struct SingularityError : Error {
    using Error::Error;
};

// A fitted rational-form denominator crossed zero (or the implied factor is
// not > 1) at some bin midpoint; message names the bin.
struct PoleError : Error {
    using Error::Error;
};

// A factor table cannot be derived for a bin (no populated class to borrow
// from).
struct MissingFactorError : Error {
    using Error::Error;
};

// File I/O and parse failures; message carries path and line number.
struct IoError : Error {
    using Error::Error;
};

} // namespace ampm
