#include "vpg/evalexpr/semantics.hpp"

#include <algorithm>

#include "vpg/util/error.hpp"

namespace vpg::evalexpr {
namespace {

const Value& lookup(const Env& env, const std::string& name) {
  auto it = env.find(name);
  if (it == env.end()) throw Error(ErrorCode::UnboundVariable, "{" + name + "} has no value");
  return it->second;
}

bool compare_ints(CompareOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Ge: return a >= b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Lt: return a < b;
  }
  return false;
}

// Calls `visit(env, weight_terms)` for every joint assignment of `vars`
// under independent marginals.
template <typename Visit>
void enumerate_independent(const std::vector<std::string>& vars, const DistMap& dists, Env env, Visit&& visit) {
  std::vector<const Categorical*> marginals;
  for (const auto& v : vars) {
    auto it = dists.find(v);
    if (it == dists.end()) throw Error(ErrorCode::UnboundVariable, "{" + v + "} has no distribution");
    if (it->second.empty()) return;
    marginals.push_back(&it->second);
  }
  std::vector<std::size_t> idx(vars.size(), 0);
  while (true) {
    diff::Scalar weight(1.0);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      env.insert_or_assign(vars[i], marginals[i]->support()[idx[i]]);
      weight = weight * marginals[i]->probs()[idx[i]];
    }
    visit(env, weight);
    std::size_t k = vars.size();
    while (k > 0) {
      --k;
      if (++idx[k] < marginals[k]->size()) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (vars.empty()) return;
  }
}

std::vector<std::string> atom_vars(const Atom& atom) { return referenced_vars(BoolExpr::leaf(atom)); }

}  // namespace

bool truthy(const Value& v) {
  if (v.is_token()) {
    const auto& t = v.as_token();
    if (t == "yes" || t == "True") return true;
    if (t == "no" || t == "False") return false;
  }
  throw Error(ErrorCode::NonBooleanTruthy, "'" + to_string(v) + "' is not a yes/no answer");
}

Value evaluate(const ValueExpr& expr, const Env& env) {
  switch (expr.kind) {
    case ValueExpr::Kind::Var: return lookup(env, expr.text);
    case ValueExpr::Kind::Int: return Value(expr.number);
    case ValueExpr::Kind::Str: return Value::token(expr.text);
    case ValueExpr::Kind::Add: {
      const Value a = evaluate(expr.operands[0], env);
      const Value b = evaluate(expr.operands[1], env);
      if (!a.is_int() || !b.is_int()) {
        throw Error(ErrorCode::TypeMismatch, "cannot add '" + to_string(a) + "' and '" + to_string(b) + "'");
      }
      return Value(a.as_int() + b.as_int());
    }
  }
  throw Error(ErrorCode::InternalError, "unknown value expression");
}

bool evaluate(const Atom& atom, const Env& env) {
  if (atom.kind == Atom::Kind::Truthy) return truthy(lookup(env, atom.var));
  const Value a = evaluate(atom.lhs, env);
  const Value b = evaluate(atom.rhs, env);
  if (a.is_int() && b.is_int()) return compare_ints(atom.op, a.as_int(), b.as_int());
  if (a.is_token() && b.is_token()) {
    if (atom.op == CompareOp::Eq) return a.as_token() == b.as_token();
    if (atom.op == CompareOp::Ne) return a.as_token() != b.as_token();
    throw Error(ErrorCode::TypeMismatch, "ordering comparison '" + std::string(to_string(atom.op)) +
                                             "' between strings '" + to_string(a) + "' and '" + to_string(b) + "'");
  }
  throw Error(ErrorCode::TypeMismatch,
              "cannot compare '" + to_string(a) + "' with '" + to_string(b) + "'");
}

bool evaluate(const BoolExpr& expr, const Env& env) {
  switch (expr.kind) {
    case BoolExpr::Kind::Atom: return evaluate(expr.atom, env);
    case BoolExpr::Kind::Not: return !evaluate(expr.operands[0], env);
    case BoolExpr::Kind::And: {
      // Both sides are evaluated so type errors do not depend on values.
      const bool a = evaluate(expr.operands[0], env);
      const bool b = evaluate(expr.operands[1], env);
      return a && b;
    }
    case BoolExpr::Kind::Or: {
      const bool a = evaluate(expr.operands[0], env);
      const bool b = evaluate(expr.operands[1], env);
      return a || b;
    }
    case BoolExpr::Kind::Xor: return evaluate(expr.operands[0], env) != evaluate(expr.operands[1], env);
  }
  throw Error(ErrorCode::InternalError, "unknown Boolean expression");
}

Value evaluate(const EvalAst& ast, const Env& env) {
  switch (ast.kind) {
    case EvalAst::Kind::Conditional: {
      const bool c = evaluate(ast.condition, env);
      Value then_v = evaluate(ast.then_value, env);
      Value else_v = evaluate(ast.else_value, env);
      return c ? then_v : else_v;
    }
    case EvalAst::Kind::Bool: return evaluate(ast.condition, env) ? kTrue : kFalse;
    case EvalAst::Kind::Value: return evaluate(ast.then_value, env);
  }
  throw Error(ErrorCode::InternalError, "unknown EVAL form");
}

Bernoulli atom_prob(const Atom& atom, const DistMap& dists) {
  std::vector<diff::Scalar> terms;
  enumerate_independent(atom_vars(atom), dists, Env{}, [&](const Env& env, const diff::Scalar& w) {
    if (evaluate(atom, env)) terms.push_back(w);
  });
  return {diff::sum(terms)};
}

Bernoulli atom_prob(const Atom& atom, const DistMap& dists, const JointDistribution& joint) {
  const auto vars = atom_vars(atom);
  std::vector<std::string> outside;
  for (const auto& v : vars) {
    if (std::find(joint.scope.begin(), joint.scope.end(), v) == joint.scope.end()) outside.push_back(v);
  }
  std::size_t rows = 1;
  for (const auto& s : joint.supports) rows *= s.size();
  if (joint.scope.size() != joint.supports.size() || rows != joint.probs.size()) {
    throw Error(ErrorCode::InvalidData, "joint table does not cover its supports");
  }
  std::vector<diff::Scalar> terms;
  Env env;
  std::vector<std::size_t> idx(joint.scope.size(), 0);
  for (std::size_t row = 0; row < rows; ++row) {
    std::size_t rest = row;
    for (std::size_t k = joint.scope.size(); k-- > 0;) {
      idx[k] = rest % joint.supports[k].size();
      rest /= joint.supports[k].size();
    }
    for (std::size_t k = 0; k < joint.scope.size(); ++k) env.insert_or_assign(joint.scope[k], joint.supports[k][idx[k]]);
    const diff::Scalar& w_row = joint.probs[row];
    enumerate_independent(outside, dists, env, [&](const Env& e, const diff::Scalar& w) {
      if (evaluate(atom, e)) terms.push_back(w_row * w);
    });
  }
  return {diff::sum(terms)};
}

Bernoulli not_prob(const Bernoulli& a) { return {1.0 - a.p_true}; }
Bernoulli and_prob(const Bernoulli& a, const Bernoulli& b) { return {a.p_true * b.p_true}; }
Bernoulli or_prob(const Bernoulli& a, const Bernoulli& b) {
  return {1.0 - (1.0 - a.p_true) * (1.0 - b.p_true)};
}
Bernoulli xor_prob(const Bernoulli& a, const Bernoulli& b) {
  return {a.p_true * (1.0 - b.p_true) + (1.0 - a.p_true) * b.p_true};
}

Bernoulli bool_prob(const BoolExpr& expr, const std::function<Bernoulli(const Atom&)>& atom_probs) {
  switch (expr.kind) {
    case BoolExpr::Kind::Atom: return atom_probs(expr.atom);
    case BoolExpr::Kind::Not: return not_prob(bool_prob(expr.operands[0], atom_probs));
    case BoolExpr::Kind::And:
      return and_prob(bool_prob(expr.operands[0], atom_probs), bool_prob(expr.operands[1], atom_probs));
    case BoolExpr::Kind::Or:
      return or_prob(bool_prob(expr.operands[0], atom_probs), bool_prob(expr.operands[1], atom_probs));
    case BoolExpr::Kind::Xor:
      return xor_prob(bool_prob(expr.operands[0], atom_probs), bool_prob(expr.operands[1], atom_probs));
  }
  throw Error(ErrorCode::InternalError, "unknown Boolean expression");
}

Categorical conditional_mixture(const Bernoulli& cond, const Categorical& then_dist, const Categorical& else_dist) {
  CategoricalBuilder out;
  const diff::Scalar p = cond.p_true;
  const diff::Scalar q = 1.0 - p;
  if (!diff::is_constant_value(p, 0.0)) {
    for (std::size_t i = 0; i < then_dist.size(); ++i) out.add(then_dist.support()[i], p * then_dist.probs()[i]);
  }
  if (!diff::is_constant_value(q, 0.0)) {
    for (std::size_t i = 0; i < else_dist.size(); ++i) out.add(else_dist.support()[i], q * else_dist.probs()[i]);
  }
  return out.build();
}

Categorical value_distribution(const ValueExpr& expr, const DistMap& dists) {
  if (expr.kind == ValueExpr::Kind::Var) {
    auto it = dists.find(expr.text);
    if (it == dists.end()) throw Error(ErrorCode::UnboundVariable, "{" + expr.text + "} has no distribution");
    return it->second;
  }
  CategoricalBuilder out;
  enumerate_independent(referenced_vars(expr), dists, Env{}, [&](const Env& env, const diff::Scalar& w) {
    out.add(evaluate(expr, env), w);
  });
  return out.build();
}

Categorical eval_distribution(const EvalAst& ast, const DistMap& dists) {
  auto atoms = [&](const Atom& a) { return atom_prob(a, dists); };
  switch (ast.kind) {
    case EvalAst::Kind::Conditional:
      return conditional_mixture(bool_prob(ast.condition, atoms), value_distribution(ast.then_value, dists),
                                 value_distribution(ast.else_value, dists));
    case EvalAst::Kind::Bool: {
      const Bernoulli b = bool_prob(ast.condition, atoms);
      return Categorical({kTrue, kFalse}, {b.p_true, 1.0 - b.p_true});
    }
    case EvalAst::Kind::Value: return value_distribution(ast.then_value, dists);
  }
  throw Error(ErrorCode::InternalError, "unknown EVAL form");
}

}  // namespace vpg::evalexpr
