#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpg/evalexpr/ast.hpp"

namespace vpg::dsl {

enum class ModuleKind {
  Loc,
  Crop,
  CropRightOf,
  CropLeftOf,
  CropInFrontOf,
  CropBehind,
  CropBelow,
  CropAbove,
  Vqa,
  Count,
  Eval,
  Result,
};

std::string_view to_string(ModuleKind kind);
std::optional<ModuleKind> module_from_string(std::string_view name);
bool is_crop(ModuleKind kind);
/// LOC and VQA: the modules that call a visual model.
bool is_visual(ModuleKind kind);
/// Argument keys in signature order, e.g. {"image", "object"} for LOC.
const std::vector<std::string>& signature(ModuleKind kind);
/// Keys whose value is a quoted literal rather than a variable.
bool is_literal_key(std::string_view key);

/// IMAGE, LEFT and RIGHT are predefined; which exist depends on the scene.
bool is_input_image(std::string_view name);

struct Arg {
  enum class Kind { Var, Literal };
  Kind kind = Kind::Var;
  std::string text;

  static Arg var(std::string name) { return {Kind::Var, std::move(name)}; }
  static Arg literal(std::string text) { return {Kind::Literal, std::move(text)}; }
  bool operator==(const Arg&) const = default;
};

struct NamedArg {
  std::string key;
  Arg value;
  bool operator==(const NamedArg&) const = default;
};

struct Statement {
  std::string target;
  ModuleKind module = ModuleKind::Result;
  std::vector<NamedArg> args;  // signature order
  std::size_t line = 0;        // 1-based source line; not part of equality
  std::shared_ptr<const evalexpr::EvalAst> eval;  // parsed `expr` of EVAL statements

  /// Throws BadArgument if the key is absent.
  const Arg& arg(std::string_view key) const;

  bool operator==(const Statement& o) const {
    return target == o.target && module == o.module && args == o.args;
  }
};

struct Program {
  std::vector<Statement> statements;
  std::string source_text;

  const Statement& result() const { return statements.back(); }
  /// Statement assigning `var`, if any.
  const Statement* producer(std::string_view var) const;
  std::optional<std::size_t> index_of(std::string_view var) const;

  bool operator==(const Program& o) const { return statements == o.statements; }
};

/// Parses and validates program text. Throws ParseError with the offending
/// line and column.
Program parse_program(std::string_view text);

/// Canonical text: no spaces, single-quoted literals (double quotes when the
/// payload contains a single quote).
std::string print_program(const Program& program);

nlohmann::ordered_json to_json(const Program& program);

/// Number of LOC and VQA statements.
std::size_t count_visual_steps(const Program& program);

struct SharedLatent {
  std::string latent;
  std::vector<std::string> answers;
  bool operator==(const SharedLatent&) const = default;
};

/// Variables whose value reaches one EVAL along more than one path, so the
/// per-answer factorization treats correlated inputs as independent. Empty
/// means factorized inference is exact for this program.
std::vector<SharedLatent> detect_shared_latents(const Program& program);

}  // namespace vpg::dsl
