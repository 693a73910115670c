#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vpg::evalexpr {

/// `{VAR}`, integer, string, or `lhs + rhs`.
struct ValueExpr {
  enum class Kind { Var, Int, Str, Add };

  Kind kind = Kind::Int;
  std::string text;            // variable name or string payload
  std::int64_t number = 0;     // Int
  std::vector<ValueExpr> operands;  // Add: exactly two

  static ValueExpr var(std::string name) { return {Kind::Var, std::move(name), 0, {}}; }
  static ValueExpr integer(std::int64_t n) { return {Kind::Int, {}, n, {}}; }
  static ValueExpr string(std::string s) { return {Kind::Str, std::move(s), 0, {}}; }
  static ValueExpr add(ValueExpr a, ValueExpr b) { return {Kind::Add, {}, 0, {std::move(a), std::move(b)}}; }

  bool operator==(const ValueExpr&) const = default;
};

enum class CompareOp { Eq, Ne, Ge, Le, Gt, Lt };
std::string_view to_string(CompareOp op);

/// Atomic Boolean expression: a comparison, or the truthiness of a variable.
struct Atom {
  enum class Kind { Compare, Truthy };

  Kind kind = Kind::Truthy;
  CompareOp op = CompareOp::Eq;
  ValueExpr lhs;
  ValueExpr rhs;
  std::string var;  // Truthy

  static Atom compare(CompareOp op, ValueExpr lhs, ValueExpr rhs) {
    return {Kind::Compare, op, std::move(lhs), std::move(rhs), {}};
  }
  static Atom truthy(std::string name) { return {Kind::Truthy, CompareOp::Eq, {}, {}, std::move(name)}; }

  bool operator==(const Atom&) const = default;
};

struct BoolExpr {
  enum class Kind { Not, And, Or, Xor, Atom };

  Kind kind = Kind::Atom;
  std::vector<BoolExpr> operands;  // Not: one; And/Or/Xor: two
  evalexpr::Atom atom;

  static BoolExpr leaf(evalexpr::Atom a) { return {Kind::Atom, {}, std::move(a)}; }
  static BoolExpr negate(BoolExpr e) { return {Kind::Not, {std::move(e)}, {}}; }
  static BoolExpr binary(Kind k, BoolExpr a, BoolExpr b) { return {k, {std::move(a), std::move(b)}, {}}; }

  bool operator==(const BoolExpr&) const = default;
};

/// A parsed EVAL expression: `then if cond else otherwise`, a Boolean
/// expression, or a plain value expression.
struct EvalAst {
  enum class Kind { Conditional, Bool, Value };

  Kind kind = Kind::Value;
  BoolExpr condition;    // Conditional, Bool
  ValueExpr then_value;  // Conditional; also the payload of Value
  ValueExpr else_value;  // Conditional

  bool operator==(const EvalAst&) const = default;
};

/// Variables referenced by `{NAME}` placeholders, first-appearance order, no repeats.
std::vector<std::string> referenced_vars(const EvalAst& ast);
std::vector<std::string> referenced_vars(const BoolExpr& expr);
std::vector<std::string> referenced_vars(const ValueExpr& expr);

/// Variable sets of the independent units the independence-assuming formulas combine:
/// one per atom, plus the then/else branches or the value expression.
std::vector<std::vector<std::string>> unit_variables(const EvalAst& ast);

/// Canonical text; parse_eval(to_string(e)) == e.
std::string to_string(const EvalAst& ast);
std::string to_string(const BoolExpr& expr);
std::string to_string(const ValueExpr& expr);

/// Parses EVAL expression text. Precedence, lowest first: if/else, or/xor,
/// and, not, comparisons, `+`. Throws ParseError(SyntaxError) with line 1 and
/// the 1-based column of the offending character.
EvalAst parse_eval(std::string_view text);

}  // namespace vpg::evalexpr
