#pragma once

#include <cstddef>
#include <vector>

#include "vpg/diff/params.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/synth/generator.hpp"
#include "vpg/toy/module.hpp"

namespace vpg::train {

/// A case with its program parsed and label decoded once.
struct PreparedCase {
  const synth::CaseRecord* record = nullptr;
  dsl::Program program;
  Value label;
};

/// Throws the parse error of the first bad case, prefixed with its id.
std::vector<PreparedCase> prepare(const std::vector<synth::CaseRecord>& cases);

/// Held-out cases together with their sub-task ground truth. Built outside
/// training; the trainer only ever sees it through evaluate().
class EvalSet {
 public:
  static EvalSet build(const std::vector<synth::CaseRecord>& cases);

  EvalSet() = default;
  EvalSet(EvalSet&&) = default;
  EvalSet& operator=(EvalSet&&) = default;
  EvalSet(const EvalSet&) = delete;
  EvalSet& operator=(const EvalSet&) = delete;

  std::size_t size() const { return cases_.size(); }
  const PreparedCase& prepared(std::size_t i) const { return cases_[i]; }
  const synth::Truth& truth(std::size_t i) const { return truths_[i]; }
  synth::Truth& mutable_truth(std::size_t i) { return truths_[i]; }

 private:
  std::vector<synth::CaseRecord> records_;
  std::vector<PreparedCase> cases_;
  std::vector<synth::Truth> truths_;
};

struct EvalResult {
  std::size_t cases = 0;
  std::size_t correct = 0;
  double acc_final = 0.0;
  std::size_t loc_calls = 0;
  std::size_t loc_correct = 0;
  double acc_loc = 0.0;
  std::size_t vqa_calls = 0;
  std::size_t vqa_correct = 0;
  double acc_vqa = 0.0;
  /// Wrong answers by source: the program failed to run, a module output
  /// disagreed with the ground truth, or neither.
  std::size_t err_program = 0;
  std::size_t err_module = 0;
  std::size_t err_other = 0;
};

/// Final answers come from execute_argmax for InferenceMode::Argmax and from
/// the argmax of the inferred distribution otherwise. Module accuracy feeds
/// each LOC/VQA call its ground-truth input region and compares the argmax
/// output with the ground truth.
EvalResult evaluate(const EvalSet& set, const toy::ModuleSet& modules, const diff::ParamStore& params,
                    engine::InferenceMode mode = engine::InferenceMode::Argmax,
                    const engine::InferenceOptions& options = {});

}  // namespace vpg::train
