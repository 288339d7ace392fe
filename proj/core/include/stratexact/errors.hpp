#pragma once

#include <stdexcept>
#include <string>

namespace stratexact {

/// Input or argument that violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested computation exceeds its configured work budget.
class IntractableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stratexact
