#include "navsec/error.hpp"

namespace navsec {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::NoRouteFound: return "NoRouteFound";
    case ErrorCode::NoForwardEdge: return "NoForwardEdge";
    case ErrorCode::NoTurnEdge: return "NoTurnEdge";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::UnknownLandmark: return "UnknownLandmark";
    case ErrorCode::TimestepMismatch: return "TimestepMismatch";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NPIConfigInvalid: return "NPIConfigInvalid";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::NotAPromptTransform: return "NotAPromptTransform";
    case ErrorCode::InconsistentTrace: return "InconsistentTrace";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace navsec
