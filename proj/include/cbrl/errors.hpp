#pragma once

#include <stdexcept>
#include <string>

namespace cbrl {

// Shape/size mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid value (non-finite entry, bad enum, malformed config, ...).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A solver's preconditions were violated or its residual check failed.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// No stabilizing Riccati solution; carries diagnostics in what().
struct CareFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cbrl
