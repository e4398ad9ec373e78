#pragma once

#include <stdexcept>
#include <string>

namespace tirepde {

/// Invalid user input: parameters, grid, configuration files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation left its domain of validity (singular matrix, non-finite
/// state, non-convergent iteration, failed fit).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tirepde
