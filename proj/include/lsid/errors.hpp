#pragma once

#include <stdexcept>

namespace lsid {

// Input-contract violations (exit code 1 at the CLI).
struct NonSymmetricError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotPositiveDefiniteError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotOrthogonalError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NuOutOfRangeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EpsTooLargeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct Epsilon0TooLargeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MissingInputModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct SingularDesignError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct OverflowedTrajectoryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DegenerateGridError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Runtime failures.
struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PackingStalledError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Fires only if a certified construction fails its own exhaustive check;
// treated as a numerics bug, not a user error.
struct SeparationViolatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lsid
