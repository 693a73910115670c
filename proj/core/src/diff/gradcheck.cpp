#include "vpg/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vpg/util/rng.hpp"

namespace vpg::diff {

GradCheckReport grad_check(const LossFunction& loss, const ParamStore& params, const GradCheckOptions& options) {
  GradCheckReport report;

  Tape tape;
  ParamBinding binding(params, &tape);
  const Scalar out = loss(binding);
  const auto analytic = binding.dense_gradient(out);

  Rng rng(options.seed);
  std::vector<std::pair<std::size_t, std::size_t>> coords = binding.touched();
  if (coords.size() > options.max_coordinates) {
    rng.shuffle(std::span(coords));
    coords.resize(options.max_coordinates);
  } else {
    std::set<std::pair<std::size_t, std::size_t>> seen(coords.begin(), coords.end());
    const std::size_t total = params.parameter_count();
    const std::size_t want = std::min(options.max_coordinates, total);
    std::size_t attempts = 0;
    while (coords.size() < want && attempts++ < 50 * want) {
      std::size_t flat = rng.below(total);
      std::size_t t = 0;
      while (flat >= params.tensor(t).size()) flat -= params.tensor(t++).size();
      if (seen.insert({t, flat}).second) coords.emplace_back(t, flat);
    }
  }

  auto value_at = [&](const ParamStore& p) {
    ParamBinding b(p);
    return loss(b).value();
  };

  ParamStore probe = params;
  for (const auto& [t, i] : coords) {
    const double original = probe.tensor(t).values[i];
    probe.tensor(t).values[i] = original + options.epsilon;
    const double up = value_at(probe);
    probe.tensor(t).values[i] = original - options.epsilon;
    const double down = value_at(probe);
    probe.tensor(t).values[i] = original;

    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double a = analytic.per_tensor[t][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.checked;
    report.max_relative_error = std::max(report.max_relative_error, rel);
    if (!(rel < options.tolerance)) {
      report.failures.push_back({params.tensor(t).name, i, a, numeric, rel});
    }
  }
  return report;
}

}  // namespace vpg::diff
