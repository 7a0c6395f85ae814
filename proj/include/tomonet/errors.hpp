#pragma once

#include <stdexcept>

namespace tomonet {

// Violated API precondition (caller bug).
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid or unusable configuration value.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or malformed external data.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: divergence, non-finite values.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tomonet
