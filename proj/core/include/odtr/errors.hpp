#pragma once

#include <stdexcept>
#include <string>

namespace odtr {

// Malformed or out-of-domain input data (CLI exit code 3).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Latent-variable sampler ran away (CLI exit code 4).
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace odtr
