#pragma once

#include <stdexcept>
#include <string>

namespace vidcls {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor dimension / shape mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid configuration keys or values.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed or truncated files (datasets, checkpoints, CSVs).
struct FormatError : Error {
    using Error::Error;
};

// Inconsistent data contents (labels out of range, empty label sets, ...).
struct DataError : Error {
    using Error::Error;
};

}  // namespace vidcls
