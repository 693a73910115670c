#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vpg/dsl/ast.hpp"
#include "vpg/engine/value.hpp"
#include "vpg/synth/scene.hpp"
#include "vpg/synth/templates.hpp"

namespace vpg::synth {

struct CaseMeta {
  int num_visual_steps = 0;
  /// Curriculum bucket: the step count for 1..4-step programs, 0 for longer ones.
  int stage = 0;
  std::string template_id;
  std::uint64_t seed = 0;
  bool operator==(const CaseMeta&) const = default;
};

struct CaseRecord {
  std::string id;
  World world;
  std::string program_text;
  std::string question;
  std::string label;
  CaseMeta meta;
  bool operator==(const CaseRecord&) const = default;
};

int stage_of(int visual_steps);

struct GenConstraints {
  int min_visual_steps = 1;
  int max_visual_steps = 4;
  /// Fresh instantiations tried before giving up on a requested label.
  int max_attempts = 64;
  SceneConfig scene;
};

/// Label the program yields on the world's ground truth.
std::string ground_truth_label(const dsl::Program& program, const World& world);

/// A case from a template drawn out of `pool` (ids; empty means all) that
/// fits the constraints. ExhaustedResampling when none fits or no attempt
/// produces the requested label.
CaseRecord gen_case(std::uint64_t seed, const std::vector<std::string>& pool, const GenConstraints& constraints = {});

/// A case from a given template asking for a positive or negative label
/// (ignored for non-binary templates).
CaseRecord gen_case_from(std::uint64_t seed, const CaseTemplate& tmpl, bool want, const GenConstraints& constraints = {});

struct DatasetConfig {
  std::size_t cases = 2000;
  std::uint64_t seed = 0;
  GenConstraints constraints;
  /// Relative share of cases per curriculum bucket: 1, 2, 3 and 4 steps,
  /// then longer programs.
  std::vector<double> stage_weights{500, 1000, 500, 300, 200};
  std::vector<std::string> templates;
  int jobs = 1;
};

/// Pure function of the config; `jobs` only changes speed. Binary templates
/// alternate positive and negative targets in index order, so each is
/// balanced to within one case.
std::vector<CaseRecord> gen_dataset(const DatasetConfig& config);

/// Ground-truth value of every program variable.
using Truth = std::map<std::string, Value, std::less<>>;

/// Evaluation-only view of a case's sub-task answers. Raises InternalError
/// while an OutcomeOnlyScope is alive, so training code cannot reach it.
Truth intermediate_truth(const CaseRecord& record);
/// Number of intermediate_truth calls so far in this process.
std::uint64_t intermediate_truth_calls();

class OutcomeOnlyScope {
 public:
  OutcomeOnlyScope();
  ~OutcomeOnlyScope();
  OutcomeOnlyScope(const OutcomeOnlyScope&) = delete;
  OutcomeOnlyScope& operator=(const OutcomeOnlyScope&) = delete;
  static bool active();
};

}  // namespace vpg::synth
