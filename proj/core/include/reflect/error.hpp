#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reflect {

enum class ErrorCode {
  kParseError,
  kSchemaError,
  kInvalidTemplate,
  kMissingBinding,
  kMissingFeature,
  kTooManyFeatures,
  kIncompleteBackground,
  kFeatureSetMismatch,
  kTargetEqualsCurrent,
  kNotNumeric,
  kMissingTemplate,
  kSessionFinalized,
  kIndexOutOfRange,
  kUnknownSession,
  kEmptyRationale,
  kReplayMismatch,
  kCorruptLog,
  kIo,
};

// Stable identifier used in diagnostics and HTTP error bodies, e.g. "SchemaError".
std::string_view error_code_name(ErrorCode code);

// All failures raised by the library. `stage` names the pipeline stage that
// produced the error when known (e.g. "shapley", "parse_model_spec").
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  // Returns a copy of this error attributed to `stage` unless one is already set.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace reflect
