#include "spacesteer/error.hpp"

namespace spacesteer {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::DuplicateMembership: return "DuplicateMembership";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::InvalidEdit: return "InvalidEdit";
    case ErrorCode::InvalidWorkspace: return "InvalidWorkspace";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MalformedExport: return "MalformedExport";
    case ErrorCode::AmbiguousParent: return "AmbiguousParent";
    case ErrorCode::NoClusters: return "NoClusters";
    case ErrorCode::MissingLayer: return "MissingLayer";
    case ErrorCode::InvalidCondition: return "InvalidCondition";
    case ErrorCode::UnknownCondition: return "UnknownCondition";
    case ErrorCode::MalformedTemplate: return "MalformedTemplate";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedRubric: return "MalformedRubric";
    case ErrorCode::TotalMismatch: return "TotalMismatch";
    case ErrorCode::MalformedGrading: return "MalformedGrading";
    case ErrorCode::OffRubricValue: return "OffRubricValue";
    case ErrorCode::MissingItem: return "MissingItem";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::PersistenceFailure: return "PersistenceFailure";
    case ErrorCode::NoData: return "NoData";
    case ErrorCode::UnknownWorkspace: return "UnknownWorkspace";
  }
  return "Unknown";
}

bool is_provider_error(ErrorCode code) noexcept {
  return code == ErrorCode::AuthError || code == ErrorCode::RateLimited ||
         code == ErrorCode::ProviderError || code == ErrorCode::Timeout;
}

}  // namespace spacesteer
