#pragma once

#include <stdexcept>
#include <string>

namespace spinn {

// Arithmetic domain violation (log of a non-positive value, division by zero, ...).
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string op, double value, const std::string& what)
      : std::runtime_error(what), op_(std::move(op)), value_(value) {}

  const std::string& op() const { return op_; }
  double value() const { return value_; }

 private:
  std::string op_;
  double value_;
};

// API misuse: wrong arity, backward before forward, bad flag combinations.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spinn
