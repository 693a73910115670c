#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vpg {

/// Every diagnostic the library raises carries one of these codes. The CLI
/// maps them onto exit codes, so the list is part of the tool's contract.
enum class ErrorCode {
  // program text
  SyntaxError,
  UnknownModule,
  DuplicateAssignment,
  UseBeforeDefine,
  MissingResult,
  BadArgument,
  // EVAL semantics
  UnboundVariable,
  TypeMismatch,
  NonBooleanTruthy,
  // execution
  ModuleFailure,
  SupportExplosion,
  OutOfVocabulary,
  UnknownTemplate,
  LabelNotInSupport,
  // numerics
  NonFiniteValue,
  NonFiniteGradient,
  ShapeMismatch,
  // data and configuration
  ExhaustedResampling,
  InvalidData,
  ConfigError,
  IoError,
  // internal invariants
  CycleDetected,
  InternalError,
};

std::string_view to_string(ErrorCode code);

/// True for codes that indicate broken internal invariants rather than bad input.
bool is_internal(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Diagnostic tied to a position in program text (1-based line and column).
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  /// Message without the code and position.
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

}  // namespace vpg
