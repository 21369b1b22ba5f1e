#include "reflect/error.hpp"

namespace reflect {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kInvalidTemplate: return "InvalidTemplate";
    case ErrorCode::kMissingBinding: return "MissingBinding";
    case ErrorCode::kMissingFeature: return "MissingFeature";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kIncompleteBackground: return "IncompleteBackground";
    case ErrorCode::kFeatureSetMismatch: return "FeatureSetMismatch";
    case ErrorCode::kTargetEqualsCurrent: return "TargetEqualsCurrent";
    case ErrorCode::kNotNumeric: return "NotNumeric";
    case ErrorCode::kMissingTemplate: return "MissingTemplate";
    case ErrorCode::kSessionFinalized: return "SessionFinalized";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kEmptyRationale: return "EmptyRationale";
    case ErrorCode::kReplayMismatch: return "ReplayMismatch";
    case ErrorCode::kCorruptLog: return "CorruptLog";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[" + stage + "] ";
  out += std::string(error_code_name(code));
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, std::string message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(std::move(message)) {}

Error Error::with_stage(std::string stage) const {
  if (!stage_.empty()) return *this;
  return Error(code_, detail_, std::move(stage));
}

}  // namespace reflect
