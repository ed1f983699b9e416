#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlonline {

enum class ErrorCode {
  DuplicateName,
  UndefinedCell,
  UnknownLabel,
  UnknownInstance,
  AlphabetTooLarge,
  EmptyAlphabet,
  InvalidClass,
  InvalidArgument,
  InvalidConfig,
  InvalidDistribution,
  EmptyVersionSpace,
  StateBudgetExceeded,
  HorizonCapExceeded,
  UnboundedDimension,
  MalformedCertificate,
  ModelMismatch,
  RealizabilityViolated,
  IdentityViolation,
  ExpertBudgetExceeded,
  HorizonTooShort,
  DegenerateProbability,
  EmptySample,
  ShapeMismatch,
  EmptyTruthSet,
  SourceNotRealizable,
  ProtocolViolation,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UndefinedCell: return "UndefinedCell";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::AlphabetTooLarge: return "AlphabetTooLarge";
    case ErrorCode::EmptyAlphabet: return "EmptyAlphabet";
    case ErrorCode::InvalidClass: return "InvalidClass";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::EmptyVersionSpace: return "EmptyVersionSpace";
    case ErrorCode::StateBudgetExceeded: return "StateBudgetExceeded";
    case ErrorCode::HorizonCapExceeded: return "HorizonCapExceeded";
    case ErrorCode::UnboundedDimension: return "UnboundedDimension";
    case ErrorCode::MalformedCertificate: return "MalformedCertificate";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::RealizabilityViolated: return "RealizabilityViolated";
    case ErrorCode::IdentityViolation: return "IdentityViolation";
    case ErrorCode::ExpertBudgetExceeded: return "ExpertBudgetExceeded";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyTruthSet: return "EmptyTruthSet";
    case ErrorCode::SourceNotRealizable: return "SourceNotRealizable";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  ErrorCode code;
  std::string message;
};

// Raised by class validation; carries every violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(ErrorCode::InvalidClass, summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

  bool has(ErrorCode code) const {
    for (const auto& v : violations_)
      if (v.code == code) return true;
    return false;
  }

 private:
  static std::string summarize(const std::vector<Violation>& violations) {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += std::string(to_string(v.code)) + " (" + v.message + ")";
    }
    return out;
  }

  std::vector<Violation> violations_;
};

}  // namespace mlonline
