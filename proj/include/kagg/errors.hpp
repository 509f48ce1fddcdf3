#pragma once

#include <stdexcept>
#include <string>

namespace kagg {

/// Bad argument to a library call: shape mismatch, non-finite input, out-of-range parameter.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration that cannot be run (bad fold count, unknown names, malformed JSON).
class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Analytic derivative requested for a kernel that has none.
class NotDifferentiable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// More replications failed than the harness tolerates.
class FailureThresholdExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kagg
