#include "vpg/train/loss.hpp"

#include <cmath>
#include <vector>

#include "vpg/util/error.hpp"

namespace vpg::train {

diff::Scalar case_nll(const Categorical& prediction, const Value& label) {
  if (const auto i = prediction.index_of(label)) {
    const diff::Scalar& p = prediction.probs()[*i];
    if (p.value() < kProbFloor) return diff::Scalar(-std::log(kProbFloor));
    return -diff::log(p);
  }
  const bool same_kind = !prediction.empty() && prediction.support().front().is_int() == label.is_int() &&
                         prediction.support().front().is_token() == label.is_token();
  if (!same_kind) {
    throw Error(ErrorCode::LabelNotInSupport, "label '" + to_string(label) + "' is not a possible answer");
  }
  return diff::Scalar(-std::log(kProbFloor));
}

diff::Scalar nll_loss(std::span<const Categorical> predictions, std::span<const Value> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(predictions.size()) + " predictions for " +
                                              std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) return diff::Scalar(0.0);
  std::vector<diff::Scalar> terms;
  terms.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) terms.push_back(case_nll(predictions[i], labels[i]));
  return diff::sum(terms) * diff::Scalar(1.0 / static_cast<double>(terms.size()));
}

}  // namespace vpg::train
