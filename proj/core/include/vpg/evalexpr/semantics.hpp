#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vpg/diff/tape.hpp"
#include "vpg/engine/categorical.hpp"
#include "vpg/engine/value.hpp"
#include "vpg/evalexpr/ast.hpp"

namespace vpg::evalexpr {

using Env = std::map<std::string, Value, std::less<>>;
using DistMap = std::map<std::string, Categorical, std::less<>>;

/// P(D = T); P(D = F) is 1 - p_true.
struct Bernoulli {
  diff::Scalar p_true;
};

/// Joint table over several variables, row-major with the last variable
/// varying fastest.
struct JointDistribution {
  std::vector<std::string> scope;
  std::vector<std::vector<Value>> supports;
  std::vector<diff::Scalar> probs;
};

// Symbolic evaluation on point values. Throws UnboundVariable, TypeMismatch
// (string/number mixing, ordering on strings, `+` on non-integers) and
// NonBooleanTruthy.
Value evaluate(const ValueExpr& expr, const Env& env);
bool evaluate(const Atom& atom, const Env& env);
bool evaluate(const BoolExpr& expr, const Env& env);
/// Boolean results are the tokens True/False.
Value evaluate(const EvalAst& ast, const Env& env);

/// Truthiness of a single token: yes/True or no/False, else NonBooleanTruthy.
bool truthy(const Value& v);

/// Mass of the assignments satisfying `atom`. Independent mode takes the
/// product of the marginals in `dists`.
Bernoulli atom_prob(const Atom& atom, const DistMap& dists);
/// Joint mode: sums the table entries satisfying `atom`; variables outside
/// the joint scope are taken from `dists`, independently of the table.
Bernoulli atom_prob(const Atom& atom, const DistMap& dists, const JointDistribution& joint);

Bernoulli not_prob(const Bernoulli& a);
Bernoulli and_prob(const Bernoulli& a, const Bernoulli& b);
Bernoulli or_prob(const Bernoulli& a, const Bernoulli& b);
Bernoulli xor_prob(const Bernoulli& a, const Bernoulli& b);

/// Combines atom probabilities with the independence-assuming formulas.
Bernoulli bool_prob(const BoolExpr& expr, const std::function<Bernoulli(const Atom&)>& atom_probs);

/// P(a) = p·P_then(a) + (1-p)·P_else(a) over the union support, then-support
/// first. A branch whose weight is the constant 0 contributes nothing.
Categorical conditional_mixture(const Bernoulli& cond, const Categorical& then_dist, const Categorical& else_dist);

/// Pushforward of a value expression under independent operands.
Categorical value_distribution(const ValueExpr& expr, const DistMap& dists);

/// Distribution of the whole expression in the independence-assuming mode.
/// Boolean expressions yield support [True, False].
Categorical eval_distribution(const EvalAst& ast, const DistMap& dists);

}  // namespace vpg::evalexpr
