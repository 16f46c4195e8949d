#pragma once

#include <stdexcept>

namespace noisevqe {

/// Violated physics or contract precondition (bad rate, bad site, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A numerical invariant failed at runtime (corrupted state, solver failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace noisevqe
