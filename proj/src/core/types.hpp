#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace negproj {

enum class ErrorCode {
  InvalidArgument,
  OutOfDomain,
  DegenerateElement,
  EmptyTrialSpace,
  IncompatiblePair,
  Nonconvergence,
  ParseError,
  IoError,
  VersionMismatch,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Physical point. 1D meshes use only the first component; the second is kept
// at zero so geometry helpers work on both dimensions.
using Point = std::array<double, 2>;

inline double conjugate_exponent(double p) {
  if (!(p > 1.0)) fail(ErrorCode::InvalidArgument, "exponent must satisfy p > 1");
  return p / (p - 1.0);
}

}  // namespace negproj
