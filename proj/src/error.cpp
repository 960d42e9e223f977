#include "stackliver/error.hpp"

namespace stackliver {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::NonNumericColumn: return "NonNumericColumn";
    case ErrorCode::NonCategorical: return "NonCategorical";
    case ErrorCode::AllMissing: return "AllMissing";
    case ErrorCode::HasMissing: return "HasMissing";
    case ErrorCode::UnexpectedLabelValue: return "UnexpectedLabelValue";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::QOutOfRange: return "QOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::InvalidFences: return "InvalidFences";
    case ErrorCode::NotFitted: return "NotFitted";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::TooFewFeatures: return "TooFewFeatures";
    case ErrorCode::SizeNotRecorded: return "SizeNotRecorded";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonBinary: return "NonBinary";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::ClassSmallerThanK: return "ClassSmallerThanK";
    case ErrorCode::TooManyFeatures: return "TooManyFeatures";
    case ErrorCode::UnboundedFeature: return "UnboundedFeature";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
  }
  return "Error";
}

int error_exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownMethod:
    case ErrorCode::VersionMismatch:
      return 2;
    case ErrorCode::IoFailure:
    case ErrorCode::EmptyFile:
    case ErrorCode::MissingColumn:
    case ErrorCode::RaggedRow:
    case ErrorCode::UnknownColumn:
    case ErrorCode::NonNumericColumn:
    case ErrorCode::NonCategorical:
    case ErrorCode::AllMissing:
    case ErrorCode::HasMissing:
    case ErrorCode::UnexpectedLabelValue:
    case ErrorCode::SchemaMismatch:
      return 3;
    default:
      return 4;
  }
}

}  // namespace stackliver
