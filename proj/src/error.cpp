#include "actionsense/error.hpp"

namespace actionsense {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedAnnotation: return "MalformedAnnotation";
    case ErrorCode::kDuplicateVideoId: return "DuplicateVideoId";
    case ErrorCode::kInvalidWindow: return "InvalidWindow";
    case ErrorCode::kMissingClip: return "MissingClip";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kUnknownRecipeId: return "UnknownRecipeId";
    case ErrorCode::kUnknownVariant: return "UnknownVariant";
    case ErrorCode::kMissingModality: return "MissingModality";
    case ErrorCode::kSequenceOverflow: return "SequenceOverflow";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyCandidate: return "EmptyCandidate";
    case ErrorCode::kCorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::kInsufficientNegatives: return "InsufficientNegatives";
    case ErrorCode::kUnscoredCandidate: return "UnscoredCandidate";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateAgreement: return "DegenerateAgreement";
    case ErrorCode::kMissingCell: return "MissingCell";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace actionsense
