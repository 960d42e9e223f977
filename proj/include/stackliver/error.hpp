#pragma once

#include <stdexcept>
#include <string>

namespace stackliver {

enum class ErrorCode {
  // configuration / usage
  ConfigError,
  UnknownMethod,
  VersionMismatch,
  // data and schema
  IoFailure,
  EmptyFile,
  MissingColumn,
  RaggedRow,
  UnknownColumn,
  NonNumericColumn,
  NonCategorical,
  AllMissing,
  HasMissing,
  UnexpectedLabelValue,
  SchemaMismatch,
  // numeric / shape preconditions
  Empty,
  QOutOfRange,
  DomainError,
  TooFewValues,
  InvalidFences,
  NotFitted,
  SingleClass,
  EmptyInput,
  KTooLarge,
  TooFewFeatures,
  SizeNotRecorded,
  TooFewSamples,
  DimensionMismatch,
  LengthMismatch,
  NonBinary,
  EmptyMatrix,
  ClassSmallerThanK,
  TooManyFeatures,
  UnboundedFeature,
  DegenerateKernel,
};

const char* error_code_name(ErrorCode code);

// CLI exit-code buckets: 2 = config error, 3 = data error, 4 = numeric failure.
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace stackliver
