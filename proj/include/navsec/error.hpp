#pragma once

#include <stdexcept>
#include <string>

namespace navsec {

enum class ErrorCode {
  InvalidArgument,
  InvalidDimensions,
  NoRouteFound,
  NoForwardEdge,
  NoTurnEdge,
  Unreachable,
  UnknownLandmark,
  TimestepMismatch,
  ContextOverflow,
  EmptyDataset,
  KTooLarge,
  NPIConfigInvalid,
  EmptyCategory,
  VocabMismatch,
  NotAPromptTransform,
  InconsistentTrace,
  EmptySet,
  DivisionByZero,
  SchemaMismatch,
  CorruptFile,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace navsec
