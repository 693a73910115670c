#include "vpg/engine/categorical.hpp"

#include <cmath>
#include <map>
#include <set>

#include "vpg/util/error.hpp"

namespace vpg {

Categorical::Categorical(std::vector<Value> support, std::vector<diff::Scalar> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (support_.size() != probs_.size()) {
    throw Error(ErrorCode::InvalidData, "support and probability lengths differ");
  }
  std::set<Value> seen;
  for (const auto& v : support_) {
    if (!seen.insert(v).second) throw Error(ErrorCode::InvalidData, "duplicate support entry " + to_string(v));
  }
}

Categorical Categorical::point(Value v) { return Categorical({std::move(v)}, {diff::Scalar(1.0)}); }

Categorical Categorical::uniform(std::vector<Value> support) {
  const double p = support.empty() ? 0.0 : 1.0 / static_cast<double>(support.size());
  std::vector<diff::Scalar> probs(support.size(), diff::Scalar(p));
  return Categorical(std::move(support), std::move(probs));
}

std::optional<std::size_t> Categorical::index_of(const Value& v) const {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == v) return i;
  }
  return std::nullopt;
}

double Categorical::prob_of(const Value& v) const {
  auto i = index_of(v);
  return i ? probs_[*i].value() : 0.0;
}

std::size_t Categorical::argmax() const {
  if (probs_.empty()) throw Error(ErrorCode::InvalidData, "argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    if (probs_[i].value() > probs_[best].value()) best = i;
  }
  return best;
}

double Categorical::total() const {
  double s = 0.0;
  for (const auto& p : probs_) s += p.value();
  return s;
}

void Categorical::validate(double tolerance) const {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i].value() >= -1e-12)) {
      throw Error(ErrorCode::InvalidData, "negative probability for " + to_string(support_[i]));
    }
  }
  const double t = total();
  if (!(std::abs(t - 1.0) <= tolerance)) {
    throw Error(ErrorCode::InvalidData, "probabilities sum to " + std::to_string(t));
  }
}

double max_abs_difference(const Categorical& p, const Categorical& q) {
  double worst = 0.0;
  for (const auto& v : p.support()) worst = std::max(worst, std::abs(p.prob_of(v) - q.prob_of(v)));
  for (const auto& v : q.support()) worst = std::max(worst, std::abs(p.prob_of(v) - q.prob_of(v)));
  return worst;
}

void CategoricalBuilder::add(const Value& v, const diff::Scalar& p) {
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (support_[i] == v) {
      terms_[i].push_back(p);
      return;
    }
  }
  support_.push_back(v);
  terms_.push_back({p});
}

void CategoricalBuilder::declare(const Value& v) {
  for (const auto& s : support_) {
    if (s == v) return;
  }
  support_.push_back(v);
  terms_.emplace_back();
}

Categorical CategoricalBuilder::build() const {
  std::vector<diff::Scalar> probs;
  probs.reserve(terms_.size());
  for (const auto& t : terms_) probs.push_back(diff::sum(t));
  return Categorical(support_, std::move(probs));
}

nlohmann::ordered_json to_json(const Categorical& c) {
  nlohmann::ordered_json support = nlohmann::ordered_json::array();
  nlohmann::ordered_json probs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    support.push_back(to_json(c.support()[i]));
    probs.push_back(c.probs()[i].value());
  }
  return {{"support", std::move(support)}, {"probs", std::move(probs)}};
}

}  // namespace vpg
