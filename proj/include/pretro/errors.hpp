#pragma once

#include <stdexcept>
#include <string>

namespace pretro {

// Parameter outside its admissible range (|zeta| > 1, negative rate, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A schedule was integrated across a point where it diverges.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Parameters that are admissible physically but not supported by a given
// operation (e.g. noise modes at zeta1 = 0, where they are undefined).
class UnsupportedParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Root finding or quadrature failed to meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A propagated state left the physical manifold (lost symplecticity or
// positivity). Always an implementation bug, never a user error.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pretro
