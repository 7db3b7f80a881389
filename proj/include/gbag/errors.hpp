#pragma once

#include <stdexcept>
#include <string>

namespace gbag {

/// Invalid configuration, input data, or parameter values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization failure or a non-finite quantity during computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void throw_config(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace gbag
