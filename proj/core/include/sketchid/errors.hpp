#pragma once

#include <stdexcept>

namespace sketchid {

/// Operand shapes are incompatible with the requested operation.
struct DimensionMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A Cholesky pivot fell below the positive-definiteness tolerance.
struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A triangular factor has a negligible diagonal entry.
struct RankDeficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Walsh-Hadamard transforms require power-of-two lengths.
struct NotPowerOfTwoError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A configuration value violates its documented constraints.
struct InvalidSpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The matrix handed to a subspace diagnostic is not orthonormal.
struct NotOrthonormalError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A simulated state left the representable range.
struct OverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The system matrix is not stable enough to simulate.
struct NotStableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A trace does not carry enough usable records for the requested estimate.
struct InsufficientTraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be read or written, or its contents are malformed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sketchid
