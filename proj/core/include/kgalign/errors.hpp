#pragma once

#include <stdexcept>

namespace kgalign {

// Invalid configuration or usage. Mapped to CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or inconsistent data. Mapped to CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numerical failure. Mapped to CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kgalign
