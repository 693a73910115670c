#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "vpg/dsl/ast.hpp"
#include "vpg/util/error.hpp"

namespace vpg::dsl {
namespace {

struct ModuleInfo {
  ModuleKind kind;
  std::string_view name;
  std::vector<std::string> keys;
};

const std::vector<ModuleInfo>& modules() {
  static const std::vector<ModuleInfo> table = {
      {ModuleKind::Loc, "LOC", {"image", "object"}},
      {ModuleKind::Crop, "CROP", {"image", "box"}},
      {ModuleKind::CropRightOf, "CROP_RIGHTOF", {"image", "box"}},
      {ModuleKind::CropLeftOf, "CROP_LEFTOF", {"image", "box"}},
      {ModuleKind::CropInFrontOf, "CROP_INFRONTOF", {"image", "box"}},
      {ModuleKind::CropBehind, "CROP_BEHIND", {"image", "box"}},
      {ModuleKind::CropBelow, "CROP_BELOW", {"image", "box"}},
      {ModuleKind::CropAbove, "CROP_ABOVE", {"image", "box"}},
      {ModuleKind::Vqa, "VQA", {"image", "question"}},
      {ModuleKind::Count, "COUNT", {"box"}},
      {ModuleKind::Eval, "EVAL", {"expr"}},
      {ModuleKind::Result, "RESULT", {"var"}},
  };
  return table;
}

const ModuleInfo& info(ModuleKind kind) {
  for (const auto& m : modules()) {
    if (m.kind == kind) return m;
  }
  throw Error(ErrorCode::InternalError, "module kind without table entry");
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Cursor over one line; columns are 1-based in diagnostics.
class LineScanner {
 public:
  LineScanner(std::string_view line, std::size_t number) : s_(line), line_(number) {}

  [[noreturn]] void fail(ErrorCode code, std::size_t pos, const std::string& msg) const {
    throw ParseError(code, line_, pos + 1, msg);
  }

  void skip_spaces() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= s_.size(); }

  std::string ident(const char* what) {
    skip_spaces();
    if (at_end() || !ident_start(s_[pos_])) fail(ErrorCode::SyntaxError, pos_, std::string("expected ") + what);
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_spaces();
    if (at_end() || s_[pos_] != c) {
      fail(ErrorCode::SyntaxError, pos_,
           std::string("expected '") + c + "'" + (at_end() ? " at end of line" : ", found '" + std::string(1, s_[pos_]) + "'"));
    }
    ++pos_;
  }

  bool peek(char c) {
    skip_spaces();
    return !at_end() && s_[pos_] == c;
  }

  // A literal may contain its own quote character; it closes at the first
  // matching quote followed by `, key=` or by `)` and the end of the line.
  std::string literal() {
    skip_spaces();
    const char q = s_[pos_];
    const std::size_t open = pos_;
    for (std::size_t i = open + 1; i < s_.size(); ++i) {
      if (s_[i] == q && closes_literal(i + 1)) {
        pos_ = i + 1;
        return std::string(s_.substr(open + 1, i - open - 1));
      }
    }
    fail(ErrorCode::SyntaxError, open, "unterminated string literal");
  }

 private:
  bool closes_literal(std::size_t i) const {
    auto skip = [&](std::size_t k) {
      while (k < s_.size() && (s_[k] == ' ' || s_[k] == '\t')) ++k;
      return k;
    };
    i = skip(i);
    if (i < s_.size() && s_[i] == ')') return skip(i + 1) == s_.size();
    if (i >= s_.size() || s_[i] != ',') return false;
    i = skip(i + 1);
    if (i >= s_.size() || !ident_start(s_[i])) return false;
    while (i < s_.size() && ident_char(s_[i])) ++i;
    i = skip(i);
    return i < s_.size() && s_[i] == '=' && (i + 1 >= s_.size() || s_[i + 1] != '=');
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

struct ArgPos {
  NamedArg arg;
  std::size_t column;  // 0-based position of the value
};

std::string quote(const std::string& s) {
  const char q = s.find('\'') == std::string::npos ? '\'' : '"';
  return q + s + q;
}

void check_kind(const LineScanner& sc, const ArgPos& a, const std::string& var, ModuleKind producer,
                std::initializer_list<ModuleKind> allowed, const char* what) {
  for (ModuleKind k : allowed) {
    if (k == producer) return;
  }
  if (is_crop(producer) && std::find(allowed.begin(), allowed.end(), ModuleKind::Crop) != allowed.end()) return;
  sc.fail(ErrorCode::BadArgument, a.column,
          a.arg.key + "=" + var + " must be " + what + ", but " + var + " is produced by " +
              std::string(to_string(producer)));
}

}  // namespace

std::string_view to_string(ModuleKind kind) { return info(kind).name; }

std::optional<ModuleKind> module_from_string(std::string_view name) {
  for (const auto& m : modules()) {
    if (m.name == name) return m.kind;
  }
  return std::nullopt;
}

bool is_crop(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Crop:
    case ModuleKind::CropRightOf:
    case ModuleKind::CropLeftOf:
    case ModuleKind::CropInFrontOf:
    case ModuleKind::CropBehind:
    case ModuleKind::CropBelow:
    case ModuleKind::CropAbove:
      return true;
    default:
      return false;
  }
}

bool is_visual(ModuleKind kind) { return kind == ModuleKind::Loc || kind == ModuleKind::Vqa; }

const std::vector<std::string>& signature(ModuleKind kind) { return info(kind).keys; }

bool is_literal_key(std::string_view key) { return key == "object" || key == "question" || key == "expr"; }

bool is_input_image(std::string_view name) { return name == "IMAGE" || name == "LEFT" || name == "RIGHT"; }

const Arg& Statement::arg(std::string_view key) const {
  for (const auto& a : args) {
    if (a.key == key) return a.value;
  }
  throw Error(ErrorCode::BadArgument, target + " has no argument '" + std::string(key) + "'");
}

const Statement* Program::producer(std::string_view var) const {
  for (const auto& s : statements) {
    if (s.target == var) return &s;
  }
  return nullptr;
}

std::optional<std::size_t> Program::index_of(std::string_view var) const {
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (statements[i].target == var) return i;
  }
  return std::nullopt;
}

Program parse_program(std::string_view text) {
  Program program;
  program.source_text = std::string(text);
  std::map<std::string, ModuleKind, std::less<>> defined;
  bool have_result = false;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    LineScanner sc(line, line_no);
    if (have_result) sc.fail(ErrorCode::SyntaxError, 0, "statement after RESULT");

    sc.skip_spaces();
    const std::size_t target_pos = sc.pos();
    Statement st;
    st.line = line_no;
    st.target = sc.ident("target variable");
    sc.expect('=');
    sc.skip_spaces();
    const std::size_t module_pos = sc.pos();
    const std::string module_name = sc.ident("module name");
    auto kind = module_from_string(module_name);
    if (!kind) {
      sc.fail(ErrorCode::UnknownModule, module_pos, "unknown module '" + module_name + "'");
    }
    st.module = *kind;

    sc.expect('(');
    std::vector<ArgPos> raw;
    if (!sc.peek(')')) {
      while (true) {
        sc.skip_spaces();
        const std::size_t key_pos = sc.pos();
        std::string key = sc.ident("argument name");
        sc.expect('=');
        sc.skip_spaces();
        const std::size_t value_pos = sc.pos();
        Arg value;
        if (sc.peek('\'') || sc.peek('"')) {
          value = Arg::literal(sc.literal());
        } else {
          value = Arg::var(sc.ident("variable or quoted literal"));
        }
        for (const auto& r : raw) {
          if (r.arg.key == key) sc.fail(ErrorCode::BadArgument, key_pos, "duplicate argument '" + key + "'");
        }
        const auto& sig = signature(st.module);
        if (std::find(sig.begin(), sig.end(), key) == sig.end()) {
          sc.fail(ErrorCode::BadArgument, key_pos, "unknown argument '" + key + "' for " + module_name);
        }
        if (is_literal_key(key) != (value.kind == Arg::Kind::Literal)) {
          sc.fail(ErrorCode::BadArgument, value_pos,
                  key + (is_literal_key(key) ? " needs a quoted literal" : " needs a variable name"));
        }
        raw.push_back({NamedArg{std::move(key), std::move(value)}, value_pos});
        if (sc.peek(',')) {
          sc.expect(',');
          continue;
        }
        break;
      }
    }
    sc.expect(')');
    sc.skip_spaces();
    if (!sc.at_end()) sc.fail(ErrorCode::SyntaxError, sc.pos(), "unexpected text after ')'");

    for (const auto& key : signature(st.module)) {
      auto it = std::find_if(raw.begin(), raw.end(), [&](const ArgPos& a) { return a.arg.key == key; });
      if (it == raw.end()) sc.fail(ErrorCode::BadArgument, module_pos, module_name + " is missing argument '" + key + "'");
    }
    // Reorder into signature order.
    std::vector<ArgPos> ordered;
    for (const auto& key : signature(st.module)) {
      ordered.push_back(*std::find_if(raw.begin(), raw.end(), [&](const ArgPos& a) { return a.arg.key == key; }));
    }

    for (const auto& a : ordered) {
      if (a.arg.value.kind != Arg::Kind::Var) continue;
      const std::string& var = a.arg.value.text;
      if (a.arg.key == "image" && is_input_image(var)) continue;
      auto def = defined.find(var);
      if (def == defined.end()) {
        sc.fail(ErrorCode::UseBeforeDefine, a.column, "variable " + var + " is used before it is assigned");
      }
      if (a.arg.key == "image") {
        check_kind(sc, a, var, def->second, {ModuleKind::Crop}, "an input image or a CROP result");
      } else if (a.arg.key == "box") {
        check_kind(sc, a, var, def->second, {ModuleKind::Loc}, "a LOC result");
      } else if (a.arg.key == "var") {
        check_kind(sc, a, var, def->second, {ModuleKind::Vqa, ModuleKind::Count, ModuleKind::Eval},
                   "an answer (VQA, COUNT or EVAL result)");
      }
    }

    if (st.module == ModuleKind::Eval) {
      const ArgPos& a = ordered.front();
      try {
        st.eval = std::make_shared<const evalexpr::EvalAst>(evalexpr::parse_eval(a.arg.value.text));
      } catch (const ParseError& e) {
        sc.fail(e.code(), a.column + e.column(), "in EVAL expression: " + e.detail());
      }
      for (const auto& var : evalexpr::referenced_vars(*st.eval)) {
        auto def = defined.find(var);
        if (def == defined.end()) {
          sc.fail(ErrorCode::UseBeforeDefine, a.column, "variable " + var + " is used before it is assigned");
        }
        check_kind(sc, a, var, def->second, {ModuleKind::Vqa, ModuleKind::Count, ModuleKind::Eval},
                   "an answer (VQA, COUNT or EVAL result)");
      }
    }

    if (is_input_image(st.target) || defined.count(st.target)) {
      sc.fail(ErrorCode::DuplicateAssignment, target_pos, "variable " + st.target + " is assigned more than once");
    }
    defined.emplace(st.target, st.module);
    for (auto& a : ordered) st.args.push_back(std::move(a.arg));
    if (st.module == ModuleKind::Result) have_result = true;
    program.statements.push_back(std::move(st));
    if (end == text.size()) break;
  }

  if (!have_result) {
    throw ParseError(ErrorCode::MissingResult, std::max<std::size_t>(line_no, 1), 1,
                     program.statements.empty() ? "program is empty" : "program has no RESULT statement");
  }
  return program;
}

std::string print_program(const Program& program) {
  std::string out;
  for (const auto& st : program.statements) {
    out += st.target;
    out += '=';
    out += to_string(st.module);
    out += '(';
    for (std::size_t i = 0; i < st.args.size(); ++i) {
      if (i) out += ',';
      out += st.args[i].key;
      out += '=';
      out += st.args[i].value.kind == Arg::Kind::Literal ? quote(st.args[i].value.text) : st.args[i].value.text;
    }
    out += ")\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

nlohmann::ordered_json to_json(const Program& program) {
  nlohmann::ordered_json statements = nlohmann::ordered_json::array();
  for (const auto& st : program.statements) {
    nlohmann::ordered_json args = nlohmann::ordered_json::object();
    for (const auto& a : st.args) {
      args[a.key] = {{"kind", a.value.kind == Arg::Kind::Var ? "var" : "literal"}, {"value", a.value.text}};
    }
    nlohmann::ordered_json j = {{"line", st.line}, {"target", st.target}, {"module", to_string(st.module)}, {"args", args}};
    if (st.eval) j["expr"] = evalexpr::to_string(*st.eval);
    statements.push_back(std::move(j));
  }
  return {{"statements", std::move(statements)}, {"visual_steps", count_visual_steps(program)}};
}

std::size_t count_visual_steps(const Program& program) {
  return static_cast<std::size_t>(std::count_if(program.statements.begin(), program.statements.end(),
                                                [](const Statement& s) { return is_visual(s.module); }));
}

}  // namespace vpg::dsl
