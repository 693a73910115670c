#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vpg::diff {

class Tape;

/// A real value that may be recorded on a Tape. Scalars without a tape are
/// constants; mixing them with recorded values is free and records nothing.
class Scalar {
 public:
  Scalar() = default;
  Scalar(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  double value() const { return value_; }
  bool is_constant() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }

 private:
  friend class Tape;
  Scalar(Tape* tape, std::uint32_t id, double value) : tape_(tape), id_(id), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
  double value_ = 0.0;
};

enum class OpKind : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Log,
  Exp,
  Sigmoid,
  Sum,
  Softmax,
  Linear,
  Custom,
};

/// Append-only record of scalar operations. Each node stores its value and the
/// local partial derivative with respect to each operand, which is all the
/// reverse sweep needs. Operands always precede the nodes that use them.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Scalar variable(double value);
  /// Handle to an already recorded node.
  Scalar at(std::uint32_t id) { return Scalar(this, id, nodes_[id].value); }

  /// Records a node. Constant operands are dropped together with their
  /// partials; if nothing variable remains the result is a constant.
  /// Throws NonFiniteValue when `value` is NaN or infinite.
  Scalar record(OpKind op, double value, std::span<const Scalar> operands, std::span<const double> partials);

  std::size_t size() const { return nodes_.size(); }
  OpKind op(std::uint32_t id) const { return nodes_[id].op; }
  double value(std::uint32_t id) const { return nodes_[id].value; }
  std::span<const std::uint32_t> operands(std::uint32_t id) const;

  /// d(output)/d(node) for every node. Throws NonFiniteGradient.
  std::vector<double> adjoints(const Scalar& output) const;

  void clear();

 private:
  struct Node {
    OpKind op;
    std::uint32_t edge_begin;
    std::uint32_t edge_end;
    double value;
  };
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> edge_operand_;
  std::vector<double> edge_partial_;
};

Scalar operator+(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a, const Scalar& b);
Scalar operator*(const Scalar& a, const Scalar& b);
Scalar operator/(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a);
inline Scalar& operator+=(Scalar& a, const Scalar& b) { return a = a + b; }
inline Scalar& operator*=(Scalar& a, const Scalar& b) { return a = a * b; }

Scalar log(const Scalar& a);
Scalar exp(const Scalar& a);
Scalar sigmoid(const Scalar& a);
Scalar sum(std::span<const Scalar> terms);
/// Fused, max-shifted softmax.
std::vector<Scalar> softmax(std::span<const Scalar> logits);

/// True for a constant exactly equal to `v`.
bool is_constant_value(const Scalar& s, double v);

}  // namespace vpg::diff
