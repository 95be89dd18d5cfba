#pragma once

#include <stdexcept>
#include <string>

namespace visco {

/// Numerical failure while computing a pole/residue decomposition.
class DecompositionError : public std::runtime_error {
 public:
  explicit DecompositionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Nearly-repeated poles; caller should perturb or merge layers.
class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid simulation configuration (e.g. violated stability bound).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Requested integration scheme not available for the given model.
class UnsupportedSchemeError : public std::runtime_error {
 public:
  explicit UnsupportedSchemeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace visco
