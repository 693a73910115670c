#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpg/diff/optim.hpp"
#include "vpg/diff/params.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/synth/generator.hpp"
#include "vpg/toy/module.hpp"
#include "vpg/train/evaluate.hpp"

namespace vpg::train {

struct StageConfig {
  int max_visual_steps = 4;
  /// Cap on the stage's training cases, 0 for all of them.
  std::size_t max_cases = 0;
  bool operator==(const StageConfig&) const = default;
};

struct TrainConfig {
  engine::InferenceMode mode = engine::InferenceMode::Exact;
  diff::OptimizerConfig optimizer;
  std::size_t batch_size = 32;
  int epochs_per_stage = 5;
  std::vector<StageConfig> curriculum{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  /// Off: every epoch draws from all cases up to the last threshold, with the
  /// same number of steps the curriculum epoch would have taken.
  bool curriculum_enabled = true;
  double disruption_fraction = 0.0;
  std::uint64_t disruption_seed = 0;
  /// Ordered gradient reduction and a zero seconds column.
  bool deterministic = true;
  /// Evaluate after every n-th epoch; the last epoch of a stage always is.
  int eval_every = 1;
  std::uint64_t seed = 0;
  /// Parameters start as uniform noise in [-init_scale, init_scale].
  double init_scale = 0.01;
  int jobs = 1;
  std::string modules = "toy";
  toy::LocConfig loc;
  engine::InferenceOptions inference;
  /// Writes stage-<k>.json after every stage when set.
  std::filesystem::path checkpoint_dir;

  /// ConfigError on decreasing thresholds, non-positive sizes, a bad
  /// fraction or an inference mode that cannot be trained.
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Missing keys keep their defaults. Unknown keys are a ConfigError that
/// lists all of them.
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

struct MetricsRow {
  int epoch = 0;
  int stage = 0;
  double loss = 0.0;
  double acc_final = 0.0;
  double acc_loc = 0.0;
  double acc_vqa = 0.0;
  std::size_t err_program = 0;
  std::size_t err_module = 0;
  std::size_t err_other = 0;
  /// Examples dropped this epoch because inference or the loss failed.
  std::size_t skipped = 0;
  double seconds = 0.0;
  bool operator==(const MetricsRow&) const = default;
};

struct TrainResult {
  diff::ParamStore params;
  std::vector<MetricsRow> history;
  std::vector<diff::ParamStore> stage_checkpoints;
  /// First few skip messages, "<case id>: <error>".
  std::vector<std::string> skip_log;
};

/// Fresh parameter store for a config's modules, initialised from its seed.
diff::ParamStore init_params(const TrainConfig& config, const toy::ModuleSet& modules);

/// Outcome-supervised training on final labels only. Row 0 is the initial
/// evaluation; then one row per epoch. Metrics come from `eval` when given
/// and are otherwise left at zero. Runs inside an OutcomeOnlyScope.
TrainResult train(const TrainConfig& config, const std::vector<synth::CaseRecord>& dataset,
                  const toy::ModuleSet& modules, diff::ParamStore params, const EvalSet* eval = nullptr);

/// Gradient of the mean NLL of `cases` at `params`. Examples that fail are
/// skipped and counted.
struct BatchGradient {
  double loss = 0.0;
  diff::Gradients grads;
  std::size_t used = 0;
  std::size_t skipped = 0;
};
BatchGradient batch_gradient(const std::vector<const PreparedCase*>& cases, const toy::ModuleSet& modules,
                             const diff::ParamStore& params, engine::InferenceMode mode,
                             const engine::InferenceOptions& options, int jobs = 1, bool deterministic = true,
                             std::vector<std::string>* skip_log = nullptr);

}  // namespace vpg::train
