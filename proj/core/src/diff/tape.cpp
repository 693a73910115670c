#include "vpg/diff/tape.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "vpg/util/error.hpp"

namespace vpg::diff {
namespace {

Tape* common_tape(const Scalar& a, const Scalar& b) {
  if (a.tape() && b.tape() && a.tape() != b.tape()) {
    throw Error(ErrorCode::InternalError, "scalars recorded on different tapes");
  }
  return a.tape() ? a.tape() : b.tape();
}

Tape* common_tape(std::span<const Scalar> xs) {
  Tape* tape = nullptr;
  for (const auto& x : xs) {
    if (!x.tape()) continue;
    if (tape && tape != x.tape()) throw Error(ErrorCode::InternalError, "scalars recorded on different tapes");
    tape = x.tape();
  }
  return tape;
}

void check_finite(double v, const char* op) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::NonFiniteValue, std::string("non-finite result from ") + op);
  }
}

}  // namespace

Scalar Tape::variable(double value) {
  check_finite(value, "leaf");
  const auto begin = static_cast<std::uint32_t>(edge_operand_.size());
  nodes_.push_back({OpKind::Leaf, begin, begin, value});
  return Scalar(this, static_cast<std::uint32_t>(nodes_.size() - 1), value);
}

Scalar Tape::record(OpKind op, double value, std::span<const Scalar> operands, std::span<const double> partials) {
  assert(operands.size() == partials.size());
  check_finite(value, "operation");
  const auto begin = static_cast<std::uint32_t>(edge_operand_.size());
  for (std::size_t i = 0; i < operands.size(); ++i) {
    if (operands[i].is_constant()) continue;
    edge_operand_.push_back(operands[i].id());
    edge_partial_.push_back(partials[i]);
  }
  const auto end = static_cast<std::uint32_t>(edge_operand_.size());
  if (begin == end) return Scalar(value);
  nodes_.push_back({op, begin, end, value});
  return Scalar(this, static_cast<std::uint32_t>(nodes_.size() - 1), value);
}

std::span<const std::uint32_t> Tape::operands(std::uint32_t id) const {
  const auto& n = nodes_[id];
  return {edge_operand_.data() + n.edge_begin, n.edge_end - n.edge_begin};
}

std::vector<double> Tape::adjoints(const Scalar& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.is_constant()) return adj;
  if (output.tape() != this) throw Error(ErrorCode::InternalError, "output not recorded on this tape");
  adj[output.id()] = 1.0;
  for (std::size_t k = output.id() + 1; k-- > 0;) {
    const double a = adj[k];
    if (a == 0.0) continue;
    if (!std::isfinite(a)) throw Error(ErrorCode::NonFiniteGradient, "non-finite adjoint at node " + std::to_string(k));
    const auto& n = nodes_[k];
    for (std::uint32_t e = n.edge_begin; e < n.edge_end; ++e) {
      adj[edge_operand_[e]] += a * edge_partial_[e];
    }
  }
  return adj;
}

void Tape::clear() {
  nodes_.clear();
  edge_operand_.clear();
  edge_partial_.clear();
}

bool is_constant_value(const Scalar& s, double v) { return s.is_constant() && s.value() == v; }

Scalar operator+(const Scalar& a, const Scalar& b) {
  if (is_constant_value(a, 0.0)) return b;
  if (is_constant_value(b, 0.0)) return a;
  Tape* t = common_tape(a, b);
  const double v = a.value() + b.value();
  if (!t) return Scalar(v);
  const Scalar ops[] = {a, b};
  const double partials[] = {1.0, 1.0};
  return t->record(OpKind::Add, v, ops, partials);
}

Scalar operator-(const Scalar& a, const Scalar& b) {
  if (is_constant_value(b, 0.0)) return a;
  Tape* t = common_tape(a, b);
  const double v = a.value() - b.value();
  if (!t) return Scalar(v);
  const Scalar ops[] = {a, b};
  const double partials[] = {1.0, -1.0};
  return t->record(OpKind::Sub, v, ops, partials);
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  if (is_constant_value(a, 0.0) || is_constant_value(b, 0.0)) return Scalar(0.0);
  if (is_constant_value(a, 1.0)) return b;
  if (is_constant_value(b, 1.0)) return a;
  Tape* t = common_tape(a, b);
  const double v = a.value() * b.value();
  if (!t) return Scalar(v);
  const Scalar ops[] = {a, b};
  const double partials[] = {b.value(), a.value()};
  return t->record(OpKind::Mul, v, ops, partials);
}

Scalar operator/(const Scalar& a, const Scalar& b) {
  if (is_constant_value(b, 1.0)) return a;
  Tape* t = common_tape(a, b);
  const double v = a.value() / b.value();
  if (!t) {
    check_finite(v, "div");
    return Scalar(v);
  }
  const Scalar ops[] = {a, b};
  const double partials[] = {1.0 / b.value(), -v / b.value()};
  return t->record(OpKind::Div, v, ops, partials);
}

Scalar operator-(const Scalar& a) {
  if (a.is_constant()) return Scalar(-a.value());
  const double partial = -1.0;
  return a.tape()->record(OpKind::Neg, -a.value(), std::span(&a, 1), std::span(&partial, 1));
}

Scalar log(const Scalar& a) {
  const double v = std::log(a.value());
  if (a.is_constant()) {
    check_finite(v, "log");
    return Scalar(v);
  }
  const double partial = 1.0 / a.value();
  return a.tape()->record(OpKind::Log, v, std::span(&a, 1), std::span(&partial, 1));
}

Scalar exp(const Scalar& a) {
  const double v = std::exp(a.value());
  if (a.is_constant()) {
    check_finite(v, "exp");
    return Scalar(v);
  }
  return a.tape()->record(OpKind::Exp, v, std::span(&a, 1), std::span(&v, 1));
}

Scalar sigmoid(const Scalar& a) {
  const double x = a.value();
  const double v = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  if (a.is_constant()) return Scalar(v);
  const double partial = v * (1.0 - v);
  return a.tape()->record(OpKind::Sigmoid, v, std::span(&a, 1), std::span(&partial, 1));
}

Scalar sum(std::span<const Scalar> terms) {
  Tape* t = common_tape(terms);
  double v = 0.0;
  for (const auto& x : terms) v += x.value();
  if (!t) return Scalar(v);
  std::size_t variables = 0;
  const Scalar* only = nullptr;
  bool constants_zero = true;
  for (const auto& x : terms) {
    if (x.is_constant()) {
      constants_zero = constants_zero && x.value() == 0.0;
    } else {
      ++variables;
      only = &x;
    }
  }
  if (variables == 1 && constants_zero) return *only;
  std::vector<double> partials(terms.size(), 1.0);
  return t->record(OpKind::Sum, v, terms, partials);
}

std::vector<Scalar> softmax(std::span<const Scalar> logits) {
  const std::size_t n = logits.size();
  std::vector<Scalar> out;
  out.reserve(n);
  if (n == 0) return out;
  double m = logits[0].value();
  for (const auto& x : logits) m = std::max(m, x.value());
  std::vector<double> s(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::exp(logits[i].value() - m);
    z += s[i];
  }
  for (auto& x : s) x /= z;
  Tape* t = common_tape(logits);
  if (!t) {
    for (double x : s) out.emplace_back(x);
    return out;
  }
  std::vector<double> partials(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) partials[j] = s[i] * ((i == j ? 1.0 : 0.0) - s[j]);
    out.push_back(t->record(OpKind::Softmax, s[i], logits, partials));
  }
  return out;
}

}  // namespace vpg::diff
