#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace duowave {

enum class ErrorCode {
  NotSingleMode,
  NoRootBracket,
  RootFindingFailed,
  GammaAtBranchPoint,
  QuadratureNotConverged,
  DomainError,
  GridTooCoarse,
  DomainTooShort,
  FlatSpectrum,
  StepTooCoarse,
  NormDrift,
  GridMismatch,
  BadCoefficientTable,
  ConfigError,
};

inline const char* error_name(ErrorCode c)
{
  switch (c) {
  case ErrorCode::NotSingleMode: return "NotSingleMode";
  case ErrorCode::NoRootBracket: return "NoRootBracket";
  case ErrorCode::RootFindingFailed: return "RootFindingFailed";
  case ErrorCode::GammaAtBranchPoint: return "GammaAtBranchPoint";
  case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
  case ErrorCode::DomainError: return "DomainError";
  case ErrorCode::GridTooCoarse: return "GridTooCoarse";
  case ErrorCode::DomainTooShort: return "DomainTooShort";
  case ErrorCode::FlatSpectrum: return "FlatSpectrum";
  case ErrorCode::StepTooCoarse: return "StepTooCoarse";
  case ErrorCode::NormDrift: return "NormDrift";
  case ErrorCode::GridMismatch: return "GridMismatch";
  case ErrorCode::BadCoefficientTable: return "BadCoefficientTable";
  case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Compact number formatting for diagnostics.
inline std::string fmt(double v)
{
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

// Library failure tagged with the module and operation that raised it.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string module, std::string op, const std::string& msg)
    : std::runtime_error(std::string(error_name(code)) + " in " + module + "::" + op + ": " + msg),
      code_(code), module_(std::move(module)), op_(std::move(op))
  {}

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }
  const std::string& op() const { return op_; }

private:
  ErrorCode code_;
  std::string module_;
  std::string op_;
};

} // namespace duowave
