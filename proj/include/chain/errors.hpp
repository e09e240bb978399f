#pragma once

#include <stdexcept>

namespace chain {

// Shape or rank mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the documented domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Misuse of the autodiff graph (double backward, non-scalar root, ...).
struct GraphError : std::logic_error {
  using std::logic_error::logic_error;
};

// Non-finite loss or state observed during training.
struct TrainingAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output file could not be written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace chain
