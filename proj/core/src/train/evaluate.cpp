#include "vpg/train/evaluate.hpp"

#include <algorithm>

#include "vpg/engine/lineage.hpp"
#include "vpg/util/error.hpp"

namespace vpg::train {

namespace {

bool same_value(const Value& a, const Value& b) {
  if (a.is_detection() && b.is_detection()) {
    auto x = a.as_detection().boxes;
    auto y = b.as_detection().boxes;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return a.as_detection().image == b.as_detection().image && x == y;
  }
  return a == b;
}

Region true_input(const dsl::Statement& s, const synth::World& world, const synth::Truth& truth) {
  const std::string& image = s.arg("image").text;
  if (dsl::is_input_image(image)) return engine::input_region(world, image);
  const auto it = truth.find(image);
  if (it == truth.end() || !it->second.is_region()) {
    throw Error(ErrorCode::InternalError, "no ground-truth region for " + image);
  }
  return it->second.as_region();
}

}  // namespace

std::vector<PreparedCase> prepare(const std::vector<synth::CaseRecord>& cases) {
  std::vector<PreparedCase> out;
  out.reserve(cases.size());
  for (const auto& c : cases) {
    try {
      out.push_back({&c, dsl::parse_program(c.program_text), Value::from_label(c.label)});
    } catch (const Error& e) {
      throw Error(e.code(), c.id + ": " + e.detail());
    }
  }
  return out;
}

EvalSet EvalSet::build(const std::vector<synth::CaseRecord>& cases) {
  EvalSet set;
  set.records_ = cases;
  set.cases_ = prepare(set.records_);
  set.truths_.reserve(cases.size());
  for (const auto& c : set.records_) set.truths_.push_back(synth::intermediate_truth(c));
  return set;
}

EvalResult evaluate(const EvalSet& set, const toy::ModuleSet& modules, const diff::ParamStore& params,
                    engine::InferenceMode mode, const engine::InferenceOptions& options) {
  EvalResult r;
  r.cases = set.size();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const PreparedCase& pc = set.prepared(i);
    const synth::World& world = pc.record->world;
    const synth::Truth& truth = set.truth(i);

    for (const auto& s : pc.program.statements) {
      if (!dsl::is_visual(s.module)) continue;
      const auto want = truth.find(s.target);
      if (want == truth.end()) continue;
      diff::ParamBinding binding(params);
      bool ok = false;
      try {
        const Categorical d = engine::call_module(s, world, modules, binding, true_input(s, world, truth));
        ok = same_value(d.support()[d.argmax()], want->second);
      } catch (const Error&) {
        ok = false;
      }
      if (s.module == dsl::ModuleKind::Loc) {
        ++r.loc_calls;
        r.loc_correct += ok ? 1 : 0;
      } else {
        ++r.vqa_calls;
        r.vqa_correct += ok ? 1 : 0;
      }
    }

    diff::ParamBinding binding(params);
    engine::ExecutionTrace trace;
    bool ran = true;
    Value answer;
    try {
      trace = engine::execute_argmax(pc.program, world, modules, binding, options);
      if (mode == engine::InferenceMode::Argmax) {
        answer = trace.result;
      } else {
        diff::ParamBinding b2(params);
        const Categorical d = engine::infer(mode, pc.program, world, modules, b2, options);
        answer = d.support()[d.argmax()];
      }
    } catch (const Error& e) {
      ran = false;
      if (e.code() == ErrorCode::SupportExplosion || e.code() == ErrorCode::ModuleFailure) {
        ++r.err_other;
      } else {
        ++r.err_program;
      }
    }
    if (!ran) continue;
    if (answer == pc.label) {
      ++r.correct;
      continue;
    }
    bool module_mismatch = false;
    for (const auto& s : pc.program.statements) {
      if (!dsl::is_visual(s.module)) continue;
      const Value* got = trace.find(s.target);
      const auto want = truth.find(s.target);
      if (got && want != truth.end() && !same_value(*got, want->second)) module_mismatch = true;
    }
    if (module_mismatch) {
      ++r.err_module;
    } else {
      ++r.err_other;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  r.acc_final = ratio(r.correct, r.cases);
  r.acc_loc = ratio(r.loc_correct, r.loc_calls);
  r.acc_vqa = ratio(r.vqa_correct, r.vqa_calls);
  return r;
}

}  // namespace vpg::train
