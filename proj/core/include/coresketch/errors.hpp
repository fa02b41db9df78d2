#pragma once

#include <stdexcept>
#include <string>

namespace coresketch {

// Input or caller contract violated (non-finite data, probability outside
// [0,1], shape mismatch, ...). CLI maps this to exit code 2.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Iterative procedure did not reach its tolerance. Carries the last residual
// so callers can report diagnostics. CLI maps this to exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace coresketch
