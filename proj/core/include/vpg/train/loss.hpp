#pragma once

#include <span>

#include "vpg/diff/tape.hpp"
#include "vpg/engine/categorical.hpp"

namespace vpg::train {

inline constexpr double kProbFloor = 1e-12;

/// -log p(label) with p clamped to at least kProbFloor. A label missing from
/// the support counts as probability 0 when it has the same kind (token or
/// integer) as the support; otherwise LabelNotInSupport.
diff::Scalar case_nll(const Categorical& prediction, const Value& label);

/// Mean of case_nll over the batch. ShapeMismatch on length mismatch.
diff::Scalar nll_loss(std::span<const Categorical> predictions, std::span<const Value> labels);

}  // namespace vpg::train
