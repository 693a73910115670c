#pragma once

#include <vector>

#include "vpg/toy/module.hpp"

namespace vpg::toy {

/// Linear cell scorer with product-Bernoulli subset outcomes.
///
/// score(cell) = (query[object] + shared) · features(cell) + bias. The
/// outcome space is every subset of the top `pool_size` cells (ties broken
/// row-major); a subset's probability is the product of sigmoid(score) for
/// members and sigmoid(-score) for the rest. Subsets are enumerated by bitmask
/// over the pool, the empty set first.
class ToyLoc : public LocModule {
 public:
  static constexpr const char* kQuery = "loc.query";
  static constexpr const char* kShared = "loc.shared";
  static constexpr const char* kBias = "loc.bias";

  explicit ToyLoc(LocConfig config = {}) : config_(config) {}

  Categorical locate(const synth::World& world, const Region& image, std::string_view object,
                     diff::ParamBinding& params) const override;
  void register_params(diff::ParamStore& store) const override;

  /// Scores of every cell in `image`, row-major.
  std::vector<diff::Scalar> scores(const synth::World& world, const Region& image, std::string_view object,
                                   diff::ParamBinding& params) const;
  /// Pool cells, highest score first.
  std::vector<Cell> pool(const synth::World& world, const Region& image, std::string_view object,
                         diff::ParamBinding& params) const;

  const LocConfig& config() const { return config_; }

 private:
  LocConfig config_;
};

/// Linear-softmax answerer with one weight block per question template.
///
/// Input vector: mean-pooled region features; then, for each slot word of the
/// question, its one-hot crossed with the summed features of the region cells
/// holding the queried category; then a bias entry.
class ToyVqa : public VqaModule {
 public:
  static constexpr std::size_t kSlotWords = 8 + 6 + 3 + 3;
  static constexpr std::size_t kInputSize =
      synth::Vocabulary::kFeatureSize + kSlotWords * synth::Vocabulary::kFeatureSize + 1;

  ToyVqa() : templates_(question_templates()) {}
  explicit ToyVqa(std::vector<QuestionTemplate> templates) : templates_(std::move(templates)) {}

  Categorical answer(const synth::World& world, const Region& region, std::string_view question,
                     diff::ParamBinding& params) const override;
  void register_params(diff::ParamStore& store) const override;

  static std::string tensor_name(const QuestionTemplate& t) { return "vqa." + t.id; }

  /// Non-zero entries of the input vector as (index, value), index-ascending.
  static std::vector<std::pair<std::size_t, double>> input_vector(const synth::World& world, const Region& region,
                                                                  const ParsedQuestion& q);

 private:
  std::vector<QuestionTemplate> templates_;
};

/// Reads the truth straight from the world: point masses on true_detection
/// and true_answer.
class OracleLoc : public LocModule {
 public:
  Categorical locate(const synth::World& world, const Region& image, std::string_view object,
                     diff::ParamBinding& params) const override;
};

class OracleVqa : public VqaModule {
 public:
  Categorical answer(const synth::World& world, const Region& region, std::string_view question,
                     diff::ParamBinding& params) const override;
};

/// Distributions given explicitly, for hand-checkable cases:
///
///   {"loc": [{"object": "post", "image": "IMAGE",
///             "outcomes": [{"boxes": [[0, 1]], "p": 0.6}, {"boxes": [], "p": 0.4}]}],
///    "vqa": [{"question": "...", "region": [r0, c0, r1, c1], "image": "IMAGE",
///             "dist": {"yes": 0.9, "no": 0.1}}]}
///
/// "image" and "region" are optional; an entry with a region takes precedence
/// over one without. Unmatched calls raise ModuleFailure.
class FixtureLoc : public LocModule {
 public:
  explicit FixtureLoc(nlohmann::ordered_json entries) : entries_(std::move(entries)) {}
  Categorical locate(const synth::World& world, const Region& image, std::string_view object,
                     diff::ParamBinding& params) const override;

 private:
  nlohmann::ordered_json entries_;
};

class FixtureVqa : public VqaModule {
 public:
  explicit FixtureVqa(nlohmann::ordered_json entries) : entries_(std::move(entries)) {}
  Categorical answer(const synth::World& world, const Region& region, std::string_view question,
                     diff::ParamBinding& params) const override;

 private:
  nlohmann::ordered_json entries_;
};

}  // namespace vpg::toy
