#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vpg/diff/params.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/engine/categorical.hpp"
#include "vpg/engine/lineage.hpp"
#include "vpg/synth/scene.hpp"
#include "vpg/toy/module.hpp"

namespace vpg::engine {

enum class InferenceMode { Argmax, Factorized, Exact, BruteForce };
std::string_view to_string(InferenceMode mode);
/// "argmax", "factorized", "exact" or "brute"; throws ConfigError.
InferenceMode mode_from_string(std::string_view name);

struct InferenceOptions {
  /// Largest factor table exact inference may build.
  std::size_t max_factor_entries = 1'000'000;
  /// Most joint assignments brute force may enumerate.
  std::size_t max_assignments = 100'000;
  Interventions interventions;
};

/// Values bound by the argmax executor, statement order.
struct ExecutionTrace {
  std::vector<std::pair<std::string, Value>> values;
  Value result;

  const Value* find(std::string_view var) const;
};

/// Calls the LOC or VQA module of `statement` on `region`. ModuleFailure if it
/// returns an empty distribution.
Categorical call_module(const dsl::Statement& statement, const synth::World& world, const toy::ModuleSet& modules,
                        diff::ParamBinding& params, const Region& region);

/// Original program semantics: every module contributes its most probable
/// value and the rest is evaluated symbolically.
ExecutionTrace execute_argmax(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                              diff::ParamBinding& params, const InferenceOptions& options = {});

/// Per-answer marginals (exact sums over each answer's own LOC ancestors),
/// combined through the EVAL expressions as if independent.
Categorical infer_factorized(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                             diff::ParamBinding& params, const InferenceOptions& options = {});

/// Exact result distribution by variable elimination.
Categorical infer_exact(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                        diff::ParamBinding& params, const InferenceOptions& options = {});

/// Reference enumeration of every joint assignment, on plain doubles.
Categorical brute_force(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                        const diff::ParamStore& params, const InferenceOptions& options = {});

/// Dispatch; Argmax yields a point mass on the executor's result.
Categorical infer(InferenceMode mode, const dsl::Program& program, const synth::World& world,
                  const toy::ModuleSet& modules, diff::ParamBinding& params, const InferenceOptions& options = {});

/// {"mode", "program_id", "support", "probs"}
nlohmann::ordered_json inference_json(const Categorical& dist, InferenceMode mode, std::string_view program_id);

}  // namespace vpg::engine
