#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spacesteer {

enum class ErrorCode {
  // workspace-core
  UnresolvedReference,
  DuplicateMembership,
  SpanOutOfRange,
  InvalidEdit,
  InvalidWorkspace,
  MalformedFile,
  UnsupportedVersion,
  // board-ingest
  MalformedExport,
  AmbiguousParent,
  // prompt-compiler
  NoClusters,
  MissingLayer,
  InvalidCondition,
  UnknownCondition,
  MalformedTemplate,
  // llm-gateway
  InvalidRequest,
  AuthError,
  RateLimited,
  ProviderError,
  Timeout,
  // rubric-engine
  MalformedRubric,
  TotalMismatch,
  MalformedGrading,
  OffRubricValue,
  MissingItem,
  // experiment-harness / analytics / service
  InvalidPlan,
  UnknownRun,
  PersistenceFailure,
  NoData,
  UnknownWorkspace,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported as Error; `code()` carries the contract
// error name so callers (CLI exit codes, HTTP payloads) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Errors raised by a model provider. `transient()` marks failures the gateway
// may retry.
class ProviderFailure : public Error {
 public:
  ProviderFailure(ErrorCode code, const std::string& message, bool transient)
      : Error(code, message), transient_(transient) {}

  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

bool is_provider_error(ErrorCode code) noexcept;

}  // namespace spacesteer
