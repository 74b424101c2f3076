#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nodal {

enum class ErrorKind {
  ParseError,
  InvalidArgument,
  LoopDefectTooLarge,
  SingularSystem,
  ExponentBelowThreshold,
  QuadratureBreakdown,
  DegenerateField,
  NoNodalIntersection,
  OrderMismatch,
  RadiusOutOfDomain,
  ZeroHeight,
  NoConvergence,
  NonConstantDeterminant,
  InverseMapFailure,
  RankDeficientDictionary,
  OrderDeficit,
  IterationOverrun,
  NodalInclusionViolated,
  ConfigInvalid,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::LoopDefectTooLarge: return "LoopDefectTooLarge";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::ExponentBelowThreshold: return "ExponentBelowThreshold";
    case ErrorKind::QuadratureBreakdown: return "QuadratureBreakdown";
    case ErrorKind::DegenerateField: return "DegenerateField";
    case ErrorKind::NoNodalIntersection: return "NoNodalIntersection";
    case ErrorKind::OrderMismatch: return "OrderMismatch";
    case ErrorKind::RadiusOutOfDomain: return "RadiusOutOfDomain";
    case ErrorKind::ZeroHeight: return "ZeroHeight";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NonConstantDeterminant: return "NonConstantDeterminant";
    case ErrorKind::InverseMapFailure: return "InverseMapFailure";
    case ErrorKind::RankDeficientDictionary: return "RankDeficientDictionary";
    case ErrorKind::OrderDeficit: return "OrderDeficit";
    case ErrorKind::IterationOverrun: return "IterationOverrun";
    case ErrorKind::NodalInclusionViolated: return "NodalInclusionViolated";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the named kinds above,
/// so callers (and the CLI manifest) can report it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace nodal
