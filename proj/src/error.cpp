#include "qprune/error.hpp"

namespace qprune {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnalignableSupports: return "UnalignableSupports";
    case ErrorCode::BothZero: return "BothZero";
    case ErrorCode::TargetUnreachable: return "TargetUnreachable";
    case ErrorCode::EvaluationDomain: return "EvaluationDomain";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::IndexNotInWindow: return "IndexNotInWindow";
    case ErrorCode::ZeroKernel: return "ZeroKernel";
    case ErrorCode::RankCollapse: return "RankCollapse";
    case ErrorCode::StreamTooShort: return "StreamTooShort";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::Io: return "Io";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AcceptanceTooLow: return "AcceptanceTooLow";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroKernel:
    case ErrorCode::RankCollapse:
    case ErrorCode::MaxIterationsExceeded:
    case ErrorCode::Infeasible:
    case ErrorCode::Unbounded:
    case ErrorCode::TargetUnreachable:
    case ErrorCode::EvaluationDomain:
      return true;
    default:
      return false;
  }
}

}  // namespace qprune
