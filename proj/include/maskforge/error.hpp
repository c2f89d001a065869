#pragma once

#include <stdexcept>
#include <string>

namespace maskforge {

// Bad inputs or configuration. The CLI maps this to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Divergence or other failure inside an iterative solver. Exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace maskforge
