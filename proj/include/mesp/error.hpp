#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mesp {

enum class ErrorCode {
  NonSymmetric,
  NonPSD,
  EigFailure,
  LengthMismatch,
  RankDeficient,
  Singular,
  SingularC,
  SingularL,
  SingularSubmatrix,
  InfeasibleBinary,
  InfeasibleXHat,
  OutOfRange,
  ParseError,
  DimensionMismatch,
  BadSpec,
  TooLarge,
  EmptyHistory,
  IoError,
  BadArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can report rows without string matching.
class MespError : public std::runtime_error {
 public:
  MespError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mesp
