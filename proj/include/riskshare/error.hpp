#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace riskshare {

enum class ErrorCode {
  ParamOutOfRange,
  DomainError,
  NotConcave,
  HypothesisUnmet,
  UnboundedProblem,
  GridIncompatible,
  MedianOutOfRange,
  IncompatibleGrids,
  DensityViolated,
  AbsContViolated,
  TooLarge,
  Unsupported,
  InvalidInput,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NotConcave: return "NotConcave";
    case ErrorCode::HypothesisUnmet: return "HypothesisUnmet";
    case ErrorCode::UnboundedProblem: return "UnboundedProblem";
    case ErrorCode::GridIncompatible: return "GridIncompatible";
    case ErrorCode::MedianOutOfRange: return "MedianOutOfRange";
    case ErrorCode::IncompatibleGrids: return "IncompatibleGrids";
    case ErrorCode::DensityViolated: return "DensityViolated";
    case ErrorCode::AbsContViolated: return "AbsContViolated";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Set for GridIncompatible: smallest equiprobable grid size on which the
  // request becomes representable.
  std::optional<std::size_t> suggested_grid() const noexcept { return suggested_grid_; }

  static Error grid(const std::string& message, std::size_t suggested) {
    Error e(ErrorCode::GridIncompatible, message);
    e.suggested_grid_ = suggested;
    return e;
  }

 private:
  ErrorCode code_;
  std::optional<std::size_t> suggested_grid_;
};

}  // namespace riskshare
