#pragma once

#include <stdexcept>
#include <string>

namespace mahnmf {

enum class ErrorCode {
  kDimension = 1,
  kDomain,
  kDegenerateBasis,
  kNumericalFailure,
  kConfiguration,
  kIo,
  kUndefined,
};

/// Base exception for all library failures. The code maps 1:1 onto the
/// C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(int iteration, const std::string& what)
      : Error(ErrorCode::kNumericalFailure,
              what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace mahnmf
