#include "vpg/util/error.hpp"

namespace vpg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownModule: return "UnknownModule";
    case ErrorCode::DuplicateAssignment: return "DuplicateAssignment";
    case ErrorCode::UseBeforeDefine: return "UseBeforeDefine";
    case ErrorCode::MissingResult: return "MissingResult";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::NonBooleanTruthy: return "NonBooleanTruthy";
    case ErrorCode::ModuleFailure: return "ModuleFailure";
    case ErrorCode::SupportExplosion: return "SupportExplosion";
    case ErrorCode::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::LabelNotInSupport: return "LabelNotInSupport";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ExhaustedResampling: return "ExhaustedResampling";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::InternalError: return "InternalError";
  }
  return "UnknownError";
}

bool is_internal(ErrorCode code) {
  return code == ErrorCode::CycleDetected || code == ErrorCode::InternalError;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

ParseError::ParseError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message)
    : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

}  // namespace vpg
