#pragma once

#include <stdexcept>
#include <string>

namespace slr {

// Violated precondition (dimension mismatch, invalid argument domain, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rank-deficient restricted design: the requested model cannot be fit.
class DegenerateModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimizer failed to meet its tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double grad_norm)
      : std::runtime_error(what), iterations(iterations), grad_norm(grad_norm) {}
  int iterations;
  double grad_norm;
};

// Exhaustive enumeration would exceed the model-count guard.
class EnumerationGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// KL divergence against a degenerate (0/1) probability is infinite.
class DivergentKlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                                     : what),
        line(line) {}
  long line;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slr
