#pragma once

#include <stdexcept>
#include <string>

namespace rfan {

// Invalid experiment configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data file; message names the offending row/column.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear algebra gave up (non-PSD matrix after jitter escalation, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistical test not computable (tiny group, zero variance).
struct TestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trial-level failure (pool exhaustion, uncovered arm, ...).
struct TrialError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rfan
