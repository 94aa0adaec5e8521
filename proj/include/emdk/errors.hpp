#pragma once

#include <stdexcept>
#include <string>

namespace emdk {

/// Input violates a mathematical precondition (zero mass, unbounded ground
/// distance, degenerate anchor, zero denominator, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Two objects that must share a point dimension do not.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed external input (files, CLI arguments, JSON).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed on input it should have handled.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace emdk
