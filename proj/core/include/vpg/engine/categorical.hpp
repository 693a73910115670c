#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "vpg/diff/tape.hpp"
#include "vpg/engine/value.hpp"

namespace vpg {

/// Distribution over a finite, duplicate-free support. Probabilities are
/// differentiable scalars so gradients flow through whatever built them.
class Categorical {
 public:
  Categorical() = default;
  /// Throws InvalidData on length mismatch or duplicate support entries.
  Categorical(std::vector<Value> support, std::vector<diff::Scalar> probs);

  static Categorical point(Value v);
  static Categorical uniform(std::vector<Value> support);

  std::span<const Value> support() const { return support_; }
  std::span<const diff::Scalar> probs() const { return probs_; }
  std::size_t size() const { return support_.size(); }
  bool empty() const { return support_.empty(); }

  std::optional<std::size_t> index_of(const Value& v) const;
  /// 0 for values outside the support.
  double prob_of(const Value& v) const;
  /// Index of the first maximum.
  std::size_t argmax() const;
  double total() const;

  /// Throws InvalidData unless every prob >= -1e-12 and the total is within
  /// `tolerance` of 1.
  void validate(double tolerance = 1e-9) const;

 private:
  std::vector<Value> support_;
  std::vector<diff::Scalar> probs_;
};

/// max over the union of supports of |p(v) - q(v)|.
double max_abs_difference(const Categorical& p, const Categorical& q);

/// Support/probability pairs accumulated by value, keeping first-seen order.
class CategoricalBuilder {
 public:
  void add(const Value& v, const diff::Scalar& p);
  /// Ensures `v` is in the support even if it never receives mass.
  void declare(const Value& v);
  Categorical build() const;

 private:
  std::vector<Value> support_;
  std::vector<std::vector<diff::Scalar>> terms_;
};

nlohmann::ordered_json to_json(const Categorical& c);

}  // namespace vpg
