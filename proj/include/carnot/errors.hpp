#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carnot
{

// Every failure the library reports carries one of these codes so callers (and the CLI)
// can react without parsing messages.
enum class ErrorCode
{
  InvalidArgument,
  DimensionMismatch,
  JacobiViolation,
  GradingViolation,
  OriginSingular,
  InvalidQuasiNorm,
  BudgetExceeded,
  UnsupportedStep,
  NegativeEigenvalue,
  NonFiniteSample,
  OutOfRange,
  NonConvergence,
  FactorizationFailure,
  MissingConstant,
  RateViolation,
  SupportViolation,
  PencilSingular,
  SolveFailure,
  MatchingAmbiguous,
  ParseError,
  ValidationError,
  IoError,
  Interrupted,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what)
{
  throw Error(code, what);
}

}  // namespace carnot
