#pragma once

#include <stdexcept>
#include <string>

namespace fcald {

/// Root of all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration or invalid arguments (CLI exit code 4).
struct ConfigError : Error {
    using Error::Error;
};

/// Linear or nonlinear solver failure (CLI exit code 3).
struct SolverError : Error {
    using Error::Error;
};

/// Scaling-limit extraction failed: exponent mismatch or ladder misconfiguration.
struct ExtractionError : Error {
    using Error::Error;
};

/// Rank deficiency beyond what the regularization can absorb.
struct IllPosedError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace fcald
