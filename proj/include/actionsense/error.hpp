#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actionsense {

enum class ErrorCode {
  kMalformedAnnotation,
  kDuplicateVideoId,
  kInvalidWindow,
  kMissingClip,
  kProviderError,
  kUnknownRecipeId,
  kUnknownVariant,
  kMissingModality,
  kSequenceOverflow,
  kEmptyBatch,
  kEmptyCandidate,
  kCorpusTooSmall,
  kInsufficientNegatives,
  kUnscoredCandidate,
  kEmptyList,
  kLengthMismatch,
  kDegenerateAgreement,
  kMissingCell,
  kInvalidArgument,
  kConfigError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace actionsense
