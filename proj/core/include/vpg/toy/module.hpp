#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpg/diff/params.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/engine/categorical.hpp"
#include "vpg/synth/scene.hpp"

namespace vpg::toy {

/// Object localization: distribution over Detection outcomes within `image`.
class LocModule {
 public:
  virtual ~LocModule() = default;
  virtual Categorical locate(const synth::World& world, const Region& image, std::string_view object,
                             diff::ParamBinding& params) const = 0;
  /// Adds this module's tensors to `store` (no-op for parameter-free modules).
  virtual void register_params(diff::ParamStore& store) const { (void)store; }
};

/// Visual question answering on a region: distribution over answer values.
class VqaModule {
 public:
  virtual ~VqaModule() = default;
  virtual Categorical answer(const synth::World& world, const Region& region, std::string_view question,
                             diff::ParamBinding& params) const = 0;
  virtual void register_params(diff::ParamStore& store) const { (void)store; }
};

struct ModuleSet {
  std::string name;
  std::shared_ptr<const LocModule> loc;
  std::shared_ptr<const VqaModule> vqa;

  void register_params(diff::ParamStore& store) const;
};

struct LocConfig {
  /// Number of top-scoring cells whose subsets form the outcome space.
  int pool_size = 4;
  /// Cells scoring at or below this never enter the pool.
  double pool_threshold = -std::numeric_limits<double>::infinity();
};

struct ModuleOptions {
  LocConfig loc;
  /// Explicit distributions for the "fixture" modules.
  nlohmann::ordered_json fixture;
};

/// Name -> factory map, so other module implementations can be plugged in
/// behind the same interfaces. Built-ins: "toy", "oracle", "fixture".
class ModuleRegistry {
 public:
  using Factory = std::function<ModuleSet(const ModuleOptions&)>;

  static ModuleRegistry& global();

  void add(std::string name, Factory factory);
  /// Throws ConfigError for unknown names.
  ModuleSet create(std::string_view name, const ModuleOptions& options = {}) const;
  std::vector<std::string> names() const;

 private:
  std::vector<std::pair<std::string, Factory>> factories_;
};

// ---- question templates -------------------------------------------------

enum class SlotKind { None, Color, Material, Activity };

struct QuestionTemplate {
  std::string id;       // parameter tensor suffix, e.g. "color_query"
  std::string pattern;  // e.g. "Does the {obj} have {attr} color?"
  SlotKind attribute = SlotKind::None;
  std::vector<Value> answers;
};

/// The eight built-in templates.
const std::vector<QuestionTemplate>& question_templates();
const QuestionTemplate& question_template(std::string_view id);

struct ParsedQuestion {
  const QuestionTemplate* tmpl = nullptr;
  std::string object;
  std::string attribute;  // empty for templates without an attribute slot
};

/// Matches `question` against `templates`. Throws UnknownTemplate when no
/// pattern fits and OutOfVocabulary when a slot word is unknown.
ParsedQuestion parse_question(std::string_view question,
                              const std::vector<QuestionTemplate>& templates = question_templates());
std::string render_question(const QuestionTemplate& tmpl, std::string_view object, std::string_view attribute = {});

/// Vocabulary for a template's attribute slot.
const std::vector<std::string>& slot_vocabulary(SlotKind kind);

// ---- ground truth -------------------------------------------------------

/// Cells of `object` inside `image`, row-major.
Detection true_detection(const synth::World& world, const Region& image, std::string_view object);
/// Answer the world implies for `question` on `region`.
Value true_answer(const synth::World& world, const Region& region, std::string_view question);

// ---- deterministic modules ----------------------------------------------

/// CROP and its spatial variants. An empty detection, or one from another
/// image, leaves the region unchanged.
Region crop(const Region& image, const Detection& detection, dsl::ModuleKind kind);
std::int64_t count(const Detection& detection);

}  // namespace vpg::toy
