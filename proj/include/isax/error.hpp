// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <stdexcept>
#include <string>

namespace isax {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or width mismatch between operands.
struct DimError : Error {
  using Error::Error;
};

// Non-finite values, optimizer blow-ups, degenerate numerics.
struct NumericError : Error {
  using Error::Error;
};

// Invalid generator/model specifications: unknown labels, bad variances,
// bad bandwidths, wrong arity.
struct SpecError : Error {
  using Error::Error;
};

// Configuration files and CLI arguments.
struct ConfigError : Error {
  using Error::Error;
};

// A verification procedure could not run validly (e.g. a loss function
// turned out to be nondeterministic during finite differencing).
struct CheckError : Error {
  using Error::Error;
};

}  // namespace isax
