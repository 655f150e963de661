#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qprune {

enum class ErrorCode {
  InvalidArgument,
  UnalignableSupports,
  BothZero,
  TargetUnreachable,
  EvaluationDomain,
  NonFiniteInput,
  IndexNotInWindow,
  ZeroKernel,
  RankCollapse,
  StreamTooShort,
  MaxIterationsExceeded,
  Infeasible,
  Unbounded,
  Io,
  ParseError,
  NonPositiveWeight,
  BadMagic,
  TruncatedFile,
  DimensionMismatch,
  AcceptanceTooLow,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for failures of the numerics (as opposed to bad input); the CLI maps
/// these to exit code 3.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qprune
