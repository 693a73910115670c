#include <algorithm>
#include <cctype>
#include <climits>
#include <memory>
#include <set>

#include "vpg/evalexpr/ast.hpp"
#include "vpg/util/error.hpp"

namespace vpg::evalexpr {
namespace {

enum class Tok { Var, Int, Str, Op, Keyword, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::int64_t number = 0;
  std::size_t pos = 0;
};

[[noreturn]] void fail(std::size_t pos, const std::string& msg) {
  throw ParseError(ErrorCode::SyntaxError, 1, pos + 1, msg);
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view s) {
  static const std::set<std::string> keywords = {"and", "or", "xor", "not", "if", "else"};
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '{') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] == ' ') ++j;
      const std::size_t start = j;
      if (j >= s.size() || !is_ident_start(s[j])) fail(j, "expected variable name after '{'");
      while (j < s.size() && is_ident_char(s[j])) ++j;
      std::string name(s.substr(start, j - start));
      while (j < s.size() && s[j] == ' ') ++j;
      if (j >= s.size() || s[j] != '}') fail(j, "expected '}'");
      out.push_back({Tok::Var, std::move(name), 0, i});
      i = j + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      std::int64_t n = 0;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
        if (n > (INT64_MAX - 9) / 10) fail(i, "integer literal too large");
        n = n * 10 + (s[j] - '0');
        ++j;
      }
      if (j < s.size() && is_ident_char(s[j])) fail(j, "malformed number");
      out.push_back({Tok::Int, std::string(s.substr(i, j - i)), n, i});
      i = j;
    } else if (c == '\'' || c == '"') {
      const std::size_t close = s.find(c, i + 1);
      if (close == std::string_view::npos) fail(i, "unterminated string literal");
      out.push_back({Tok::Str, std::string(s.substr(i + 1, close - i - 1)), 0, i});
      i = close + 1;
    } else if (c == '(') {
      out.push_back({Tok::LParen, "(", 0, i++});
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")", 0, i++});
    } else if (c == '=' || c == '!' || c == '<' || c == '>') {
      if (i + 1 < s.size() && s[i + 1] == '=') {
        out.push_back({Tok::Op, std::string(s.substr(i, 2)), 0, i});
        i += 2;
      } else if (c == '<' || c == '>') {
        out.push_back({Tok::Op, std::string(1, c), 0, i++});
      } else {
        fail(i, std::string("unexpected '") + c + "'");
      }
    } else if (c == '+') {
      out.push_back({Tok::Op, "+", 0, i++});
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      std::string word(s.substr(i, j - i));
      if (!keywords.count(word)) fail(i, "unexpected identifier '" + word + "' (variables are written {NAME})");
      out.push_back({Tok::Keyword, std::move(word), 0, i});
      i = j;
    } else {
      fail(i, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", 0, s.size()});
  return out;
}

// Untyped parse tree; classified into value/Boolean forms afterwards.
struct Node {
  enum class Kind { Var, Int, Str, Add, Cmp, Not, And, Or, Xor, Cond };
  Kind kind;
  std::string text;
  std::int64_t number = 0;
  CompareOp op = CompareOp::Eq;
  std::vector<Node> kids;
  std::size_t pos = 0;
};

bool is_value(const Node& n) {
  return n.kind == Node::Kind::Var || n.kind == Node::Kind::Int || n.kind == Node::Kind::Str ||
         n.kind == Node::Kind::Add;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Node top() {
    Node first = disjunction();
    if (keyword("if")) {
      Node cond = disjunction();
      if (!keyword("else")) fail(peek().pos, "expected 'else'");
      Node otherwise = disjunction();
      Node n{Node::Kind::Cond, {}, 0, CompareOp::Eq, {std::move(first), std::move(cond), std::move(otherwise)}, 0};
      expect_end();
      return n;
    }
    expect_end();
    return first;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() { return toks_[pos_++]; }

  bool keyword(const char* kw) {
    if (peek().kind == Tok::Keyword && peek().text == kw) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_end() {
    if (peek().kind != Tok::End) fail(peek().pos, "unexpected '" + peek().text + "'");
  }

  Node disjunction() {
    Node lhs = conjunction();
    while (peek().kind == Tok::Keyword && (peek().text == "or" || peek().text == "xor")) {
      const auto kind = advance().text == "or" ? Node::Kind::Or : Node::Kind::Xor;
      Node rhs = conjunction();
      lhs = Node{kind, {}, 0, CompareOp::Eq, {std::move(lhs), std::move(rhs)}, 0};
    }
    return lhs;
  }

  Node conjunction() {
    Node lhs = negation();
    while (keyword("and")) {
      Node rhs = negation();
      lhs = Node{Node::Kind::And, {}, 0, CompareOp::Eq, {std::move(lhs), std::move(rhs)}, 0};
    }
    return lhs;
  }

  Node negation() {
    const std::size_t at = peek().pos;
    if (keyword("not")) {
      Node inner = negation();
      return Node{Node::Kind::Not, {}, 0, CompareOp::Eq, {std::move(inner)}, at};
    }
    return comparison();
  }

  Node comparison() {
    Node lhs = additive();
    if (peek().kind == Tok::Op && peek().text != "+") {
      const auto& t = advance();
      CompareOp op = CompareOp::Eq;
      if (t.text == "==") op = CompareOp::Eq;
      else if (t.text == "!=") op = CompareOp::Ne;
      else if (t.text == ">=") op = CompareOp::Ge;
      else if (t.text == "<=") op = CompareOp::Le;
      else if (t.text == ">") op = CompareOp::Gt;
      else op = CompareOp::Lt;
      Node rhs = additive();
      if (peek().kind == Tok::Op && peek().text != "+") fail(peek().pos, "chained comparisons are not supported");
      return Node{Node::Kind::Cmp, {}, 0, op, {std::move(lhs), std::move(rhs)}, t.pos};
    }
    return lhs;
  }

  Node additive() {
    Node lhs = primary();
    while (peek().kind == Tok::Op && peek().text == "+") {
      const std::size_t at = advance().pos;
      Node rhs = primary();
      if (!is_value(lhs) || !is_value(rhs)) fail(at, "'+' needs value operands");
      lhs = Node{Node::Kind::Add, {}, 0, CompareOp::Eq, {std::move(lhs), std::move(rhs)}, at};
    }
    return lhs;
  }

  Node primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Var:
        ++pos_;
        return Node{Node::Kind::Var, t.text, 0, CompareOp::Eq, {}, t.pos};
      case Tok::Int:
        ++pos_;
        return Node{Node::Kind::Int, {}, t.number, CompareOp::Eq, {}, t.pos};
      case Tok::Str:
        ++pos_;
        return Node{Node::Kind::Str, t.text, 0, CompareOp::Eq, {}, t.pos};
      case Tok::LParen: {
        ++pos_;
        Node inner = disjunction();
        if (peek().kind != Tok::RParen) fail(peek().pos, "expected ')'");
        ++pos_;
        return inner;
      }
      case Tok::End:
        fail(t.pos, "unexpected end of expression");
      default:
        fail(t.pos, "unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

ValueExpr to_value(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Var: return ValueExpr::var(n.text);
    case Node::Kind::Int: return ValueExpr::integer(n.number);
    case Node::Kind::Str: return ValueExpr::string(n.text);
    case Node::Kind::Add: return ValueExpr::add(to_value(n.kids[0]), to_value(n.kids[1]));
    default: fail(n.pos, "expected a value expression, found a Boolean expression");
  }
}

BoolExpr to_bool(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Var: return BoolExpr::leaf(Atom::truthy(n.text));
    case Node::Kind::Cmp:
      return BoolExpr::leaf(Atom::compare(n.op, to_value(n.kids[0]), to_value(n.kids[1])));
    case Node::Kind::Not: return BoolExpr::negate(to_bool(n.kids[0]));
    case Node::Kind::And: return BoolExpr::binary(BoolExpr::Kind::And, to_bool(n.kids[0]), to_bool(n.kids[1]));
    case Node::Kind::Or: return BoolExpr::binary(BoolExpr::Kind::Or, to_bool(n.kids[0]), to_bool(n.kids[1]));
    case Node::Kind::Xor: return BoolExpr::binary(BoolExpr::Kind::Xor, to_bool(n.kids[0]), to_bool(n.kids[1]));
    default: fail(n.pos, "literal or sum used where a condition is required");
  }
}

}  // namespace

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Ne: return "!=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Lt: return "<";
  }
  return "?";
}

namespace {

void collect(const ValueExpr& e, std::vector<std::string>& out) {
  if (e.kind == ValueExpr::Kind::Var) {
    if (std::find(out.begin(), out.end(), e.text) == out.end()) out.push_back(e.text);
  }
  for (const auto& op : e.operands) collect(op, out);
}

void collect(const BoolExpr& e, std::vector<std::string>& out) {
  if (e.kind == BoolExpr::Kind::Atom) {
    if (e.atom.kind == Atom::Kind::Truthy) {
      if (std::find(out.begin(), out.end(), e.atom.var) == out.end()) out.push_back(e.atom.var);
    } else {
      collect(e.atom.lhs, out);
      collect(e.atom.rhs, out);
    }
    return;
  }
  for (const auto& op : e.operands) collect(op, out);
}

void collect_atoms(const BoolExpr& e, std::vector<const Atom*>& out) {
  if (e.kind == BoolExpr::Kind::Atom) {
    out.push_back(&e.atom);
    return;
  }
  for (const auto& op : e.operands) collect_atoms(op, out);
}

std::string quote(const std::string& s) {
  const char q = s.find('\'') == std::string::npos ? '\'' : '"';
  return q + s + q;
}

bool is_compound(const BoolExpr& e) {
  return e.kind == BoolExpr::Kind::And || e.kind == BoolExpr::Kind::Or || e.kind == BoolExpr::Kind::Xor;
}

std::string value_operand(const ValueExpr& e) {
  return e.kind == ValueExpr::Kind::Add ? "(" + to_string(e) + ")" : to_string(e);
}

}  // namespace

std::vector<std::string> referenced_vars(const ValueExpr& expr) {
  std::vector<std::string> out;
  collect(expr, out);
  return out;
}

std::vector<std::string> referenced_vars(const BoolExpr& expr) {
  std::vector<std::string> out;
  collect(expr, out);
  return out;
}

std::vector<std::string> referenced_vars(const EvalAst& ast) {
  std::vector<std::string> out;
  switch (ast.kind) {
    case EvalAst::Kind::Conditional:
      collect(ast.then_value, out);
      collect(ast.condition, out);
      collect(ast.else_value, out);
      break;
    case EvalAst::Kind::Bool:
      collect(ast.condition, out);
      break;
    case EvalAst::Kind::Value:
      collect(ast.then_value, out);
      break;
  }
  return out;
}

std::vector<std::vector<std::string>> unit_variables(const EvalAst& ast) {
  std::vector<std::vector<std::string>> units;
  if (ast.kind != EvalAst::Kind::Value) {
    std::vector<const Atom*> atoms;
    collect_atoms(ast.condition, atoms);
    for (const Atom* a : atoms) units.push_back(referenced_vars(BoolExpr::leaf(*a)));
  }
  if (ast.kind != EvalAst::Kind::Bool) units.push_back(referenced_vars(ast.then_value));
  if (ast.kind == EvalAst::Kind::Conditional) units.push_back(referenced_vars(ast.else_value));
  return units;
}

std::string to_string(const ValueExpr& expr) {
  switch (expr.kind) {
    case ValueExpr::Kind::Var: return "{" + expr.text + "}";
    case ValueExpr::Kind::Int: return std::to_string(expr.number);
    case ValueExpr::Kind::Str: return quote(expr.text);
    case ValueExpr::Kind::Add: return to_string(expr.operands[0]) + " + " + value_operand(expr.operands[1]);
  }
  return {};
}

std::string to_string(const BoolExpr& expr) {
  switch (expr.kind) {
    case BoolExpr::Kind::Atom:
      if (expr.atom.kind == Atom::Kind::Truthy) return "{" + expr.atom.var + "}";
      return to_string(expr.atom.lhs) + " " + std::string(to_string(expr.atom.op)) + " " + to_string(expr.atom.rhs);
    case BoolExpr::Kind::Not: {
      const auto& inner = expr.operands[0];
      const bool wrap = is_compound(inner);
      return "not " + (wrap ? "(" + to_string(inner) + ")" : to_string(inner));
    }
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or:
    case BoolExpr::Kind::Xor: {
      const char* word = expr.kind == BoolExpr::Kind::And ? " and " : expr.kind == BoolExpr::Kind::Or ? " or " : " xor ";
      auto side = [](const BoolExpr& e) { return is_compound(e) ? "(" + to_string(e) + ")" : to_string(e); };
      return side(expr.operands[0]) + word + side(expr.operands[1]);
    }
  }
  return {};
}

std::string to_string(const EvalAst& ast) {
  switch (ast.kind) {
    case EvalAst::Kind::Conditional:
      return to_string(ast.then_value) + " if " + to_string(ast.condition) + " else " + to_string(ast.else_value);
    case EvalAst::Kind::Bool:
      return to_string(ast.condition);
    case EvalAst::Kind::Value:
      return to_string(ast.then_value);
  }
  return {};
}

EvalAst parse_eval(std::string_view text) {
  if (text.find_first_not_of(" \t") == std::string_view::npos) fail(0, "empty expression");
  Parser parser(tokenize(text));
  const Node root = parser.top();
  EvalAst ast;
  if (root.kind == Node::Kind::Cond) {
    ast.kind = EvalAst::Kind::Conditional;
    ast.then_value = to_value(root.kids[0]);
    ast.condition = to_bool(root.kids[1]);
    ast.else_value = to_value(root.kids[2]);
  } else if (is_value(root)) {
    ast.kind = EvalAst::Kind::Value;
    ast.then_value = to_value(root);
  } else {
    ast.kind = EvalAst::Kind::Bool;
    ast.condition = to_bool(root);
  }
  return ast;
}

}  // namespace vpg::evalexpr
