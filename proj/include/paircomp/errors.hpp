#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace paircomp {

// Argument-contract violations: mismatched sizes, indices out of range,
// inputs that fail a documented precondition.
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerically inadmissible input (NaN/inf where a finite value is required).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A weight reached zero or below during integration; the trajectory left the
// regime where the dynamics are well posed. Carries the offending index.
class collapse_error : public std::runtime_error {
 public:
  collapse_error(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Iterative solver failures: divergence, non-convergence within the
// iteration budget, loss of positivity.
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A fixed-point window longer than the admissible bound for the current
// envelope; callers with automatic window selection shrink and retry.
class window_error : public solver_error {
 public:
  using solver_error::solver_error;
};

// Problem size beyond a documented capacity limit.
class capacity_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration / CLI errors. line() is 1-based, 0 when not tied to a line.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_ = 0;
};

}  // namespace paircomp
