#include <algorithm>
#include <map>
#include <set>

#include "vpg/dsl/ast.hpp"

namespace vpg::dsl {
namespace {

using VarSet = std::set<std::string, std::less<>>;

// Variables the value of `var` is computed from, including itself, through
// image/box arguments and EVAL placeholders.
VarSet ancestry(const Program& program, const std::string& var) {
  VarSet seen;
  std::vector<std::string> stack = {var};
  while (!stack.empty()) {
    std::string v = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(v).second) continue;
    const Statement* st = program.producer(v);
    if (!st) continue;
    for (const auto& a : st->args) {
      if (a.value.kind == Arg::Kind::Var) stack.push_back(a.value.text);
    }
    if (st->eval) {
      for (const auto& r : evalexpr::referenced_vars(*st->eval)) stack.push_back(r);
    }
  }
  return seen;
}

bool is_answer(ModuleKind k) { return k == ModuleKind::Vqa || k == ModuleKind::Count; }

void merge(std::vector<SharedLatent>& out, const std::string& latent, const std::vector<std::string>& answers) {
  for (auto& e : out) {
    if (e.latent == latent) {
      for (const auto& a : answers) {
        if (std::find(e.answers.begin(), e.answers.end(), a) == e.answers.end()) e.answers.push_back(a);
      }
      return;
    }
  }
  out.push_back({latent, answers});
}

}  // namespace

std::vector<SharedLatent> detect_shared_latents(const Program& program) {
  const auto& sts = program.statements;
  std::map<std::string, VarSet, std::less<>> anc;
  for (const auto& st : sts) anc[st.target] = ancestry(program, st.target);

  // For each EVAL: the VQA/COUNT answers it depends on, transitively.
  std::vector<VarSet> eval_answers;
  for (const auto& st : sts) {
    if (st.module != ModuleKind::Eval) continue;
    VarSet answers;
    for (const auto& v : anc[st.target]) {
      const Statement* p = program.producer(v);
      if (p && is_answer(p->module)) answers.insert(v);
    }
    eval_answers.push_back(std::move(answers));
  }

  // Answers whose lineage passes through a LOC or CROP variable.
  auto dependents = [&](const std::string& latent) {
    std::vector<std::string> out;
    for (const auto& st : sts) {
      if (is_answer(st.module) && anc[st.target].count(latent)) out.push_back(st.target);
    }
    return out;
  };
  auto meets = [&](const std::vector<std::string>& answers) {
    for (const auto& ev : eval_answers) {
      int n = 0;
      for (const auto& a : answers) n += static_cast<int>(ev.count(a));
      if (n >= 2) return true;
    }
    return false;
  };

  std::vector<SharedLatent> out;
  for (const auto& st : sts) {
    if (st.module != ModuleKind::Loc && !is_crop(st.module)) continue;
    const auto deps = dependents(st.target);
    if (deps.size() < 2 || !meets(deps)) continue;
    // Report the latent closest to the answers: skip V when a LOC/CROP
    // consuming it carries exactly the same dependents.
    bool covered = false;
    for (const auto& child : sts) {
      if (child.module != ModuleKind::Loc && !is_crop(child.module)) continue;
      bool consumes = false;
      for (const auto& a : child.args) consumes |= a.value.kind == Arg::Kind::Var && a.value.text == st.target;
      if (consumes && dependents(child.target) == deps) covered = true;
    }
    if (!covered) merge(out, st.target, deps);
  }

  // Answer-level sharing inside one EVAL: a variable reaching two operands,
  // or appearing in two of the units the independence formulas combine.
  for (const auto& st : sts) {
    if (st.module != ModuleKind::Eval) continue;
    std::map<std::string, int, std::less<>> operand_hits;
    for (const auto& operand : evalexpr::referenced_vars(*st.eval)) {
      for (const auto& v : anc[operand]) {
        const Statement* p = program.producer(v);
        if (p && (is_answer(p->module) || p->module == ModuleKind::Eval)) ++operand_hits[v];
      }
    }
    std::map<std::string, int, std::less<>> unit_hits;
    for (const auto& unit : evalexpr::unit_variables(*st.eval)) {
      for (const auto& v : unit) ++unit_hits[v];
    }
    for (const auto& other : sts) {
      const auto oh = operand_hits.find(other.target);
      const auto uh = unit_hits.find(other.target);
      if ((oh != operand_hits.end() && oh->second >= 2) || (uh != unit_hits.end() && uh->second >= 2)) {
        merge(out, other.target, {st.target});
      }
    }
  }
  return out;
}

}  // namespace vpg::dsl
