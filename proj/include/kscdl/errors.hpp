#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kscdl {

enum class ErrorCode {
  DegenerateConfiguration,
  NearCutLocus,
  NoConvergence,
  InvalidProblem,
  NotPsd,
  RankCollapse,
  DegenerateData,
  DegenerateLabels,
  DimensionMismatch,
  ParseError,
  ShapeMismatch,
  UnsupportedDim,
  VersionMismatch,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can report it in a machine-parsable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace kscdl
