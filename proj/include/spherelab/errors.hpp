#pragma once

#include <stdexcept>
#include <string>

namespace spherelab {

// Thrown when an input violates a documented precondition (empty batch,
// zero-norm row, invalid dimension, bad configuration value, ...).
class degenerate_input : public std::invalid_argument {
 public:
  explicit degenerate_input(const std::string& msg) : std::invalid_argument(msg) {}
};

// Thrown when the toy trainer produces a non-finite loss or gradient.
// Carries the step index at which the blow-up was detected.
class training_failure : public std::runtime_error {
 public:
  training_failure(const std::string& msg, int step)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

// Thrown when an iterative numerical routine fails to converge or a
// computation leaves its valid regime in a way we cannot recover from.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spherelab
