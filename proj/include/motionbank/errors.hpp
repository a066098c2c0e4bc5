#pragma once

#include <stdexcept>
#include <string>

namespace mb {

// Bad input: malformed files, inconsistent shapes, invalid configuration.
// The CLI maps this to exit code 1; every other exception maps to 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

void log_warning(const std::string& message);

}  // namespace mb
