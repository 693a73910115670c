#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vpg/diff/params.hpp"

namespace vpg::diff {

using LossFunction = std::function<Scalar(ParamBinding&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Coordinates compared per call. Touched coordinates come first; the rest
  /// are random untouched ones, whose gradient must be zero.
  std::size_t max_coordinates = 64;
  /// relative error = |analytic - numeric| / max(|analytic|, |numeric|, floor)
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckFailure {
  std::string tensor;
  std::size_t index;
  double analytic;
  double numeric;
  double relative_error;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::vector<GradCheckFailure> failures;

  bool passed() const { return failures.empty(); }
};

/// Compares reverse-mode gradients of `loss` against central differences.
GradCheckReport grad_check(const LossFunction& loss, const ParamStore& params, const GradCheckOptions& options = {});

}  // namespace vpg::diff
