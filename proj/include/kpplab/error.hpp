#pragma once

#include <stdexcept>
#include <string>

namespace kpplab {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode : int {
  invalid_argument = 1,
  out_of_range = 2,
  stability_violation = 3,  // monotonicity or CFL bound broken by a step
  front_margin = 4,         // front entered the boundary safety margin
  no_front = 5,
  io = 6,
  numerical = 7,  // NaN/inf detected
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) throw Error(code, what);
}

}  // namespace kpplab
