#pragma once

#include <stdexcept>
#include <string>

namespace rodspec {

// Error categories map onto CLI exit codes: config -> 1, hypothesis -> 2,
// numerical -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct HypothesisError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

}  // namespace rodspec
