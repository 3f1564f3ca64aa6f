#pragma once

#include <stdexcept>
#include <string>

namespace nash_adm {

enum class ErrorCode {
  kInput,           // malformed or out-of-contract arguments
  kConfig,          // experiment configuration rejected before compute
  kNumericOverflow, // non-finite intermediate value during an iteration
  kNonContraction,  // reference solver failed to contract
  kInvariant,       // internal consistency check failed
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the iteration loops; carries the index of the failing step.
class NumericError : public Error {
 public:
  NumericError(long iteration, const std::string& what)
      : Error(ErrorCode::kNumericOverflow,
              what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace nash_adm
