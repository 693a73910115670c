#include <map>

#include "vpg/engine/inference.hpp"
#include "vpg/evalexpr/semantics.hpp"
#include "vpg/util/error.hpp"

namespace vpg::engine {

std::string_view to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::Argmax: return "argmax";
    case InferenceMode::Factorized: return "factorized";
    case InferenceMode::Exact: return "exact";
    case InferenceMode::BruteForce: return "brute";
  }
  return "?";
}

InferenceMode mode_from_string(std::string_view name) {
  for (auto m : {InferenceMode::Argmax, InferenceMode::Factorized, InferenceMode::Exact, InferenceMode::BruteForce}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::ConfigError, "unknown inference mode '" + std::string(name) + "'");
}

const Value* ExecutionTrace::find(std::string_view var) const {
  for (const auto& [name, v] : values) {
    if (name == var) return &v;
  }
  return nullptr;
}

Categorical call_module(const dsl::Statement& statement, const synth::World& world, const toy::ModuleSet& modules,
                        diff::ParamBinding& params, const Region& region) {
  Categorical dist;
  if (statement.module == dsl::ModuleKind::Loc) {
    if (!modules.loc) throw Error(ErrorCode::ModuleFailure, "no LOC module configured");
    dist = modules.loc->locate(world, region, statement.arg("object").text, params);
  } else if (statement.module == dsl::ModuleKind::Vqa) {
    if (!modules.vqa) throw Error(ErrorCode::ModuleFailure, "no VQA module configured");
    dist = modules.vqa->answer(world, region, statement.arg("question").text, params);
  } else {
    throw Error(ErrorCode::InternalError, "call_module on a deterministic statement");
  }
  if (dist.empty()) throw Error(ErrorCode::ModuleFailure, statement.target + ": module returned no candidates");
  return dist;
}

ExecutionTrace execute_argmax(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                              diff::ParamBinding& params, const InferenceOptions& options) {
  ExecutionTrace trace;
  evalexpr::Env env;
  auto value_of = [&](std::string_view v) -> const Value& {
    auto it = env.find(v);
    if (it == env.end()) throw Error(ErrorCode::InternalError, "unbound " + std::string(v));
    return it->second;
  };
  for (const auto& st : program.statements) {
    Value out;
    if (auto it = options.interventions.find(st.target); it != options.interventions.end()) {
      out = it->second;
    } else {
      switch (st.module) {
        case dsl::ModuleKind::Loc:
        case dsl::ModuleKind::Vqa: {
          const Region region = resolve_region(program, world, st.arg("image").text, value_of, options.interventions);
          const Categorical dist = call_module(st, world, modules, params, region);
          out = dist.support()[dist.argmax()];
          break;
        }
        case dsl::ModuleKind::Count:
          out = Value(toy::count(value_of(st.arg("box").text).as_detection()));
          break;
        case dsl::ModuleKind::Eval:
          out = evalexpr::evaluate(*st.eval, env);
          break;
        case dsl::ModuleKind::Result:
          out = value_of(st.arg("var").text);
          break;
        default:
          out = resolve_region(program, world, st.target, value_of, options.interventions);
          break;
      }
    }
    env.insert_or_assign(st.target, out);
    trace.values.emplace_back(st.target, out);
    if (st.module == dsl::ModuleKind::Result) trace.result = out;
  }
  return trace;
}

Categorical infer(InferenceMode mode, const dsl::Program& program, const synth::World& world,
                  const toy::ModuleSet& modules, diff::ParamBinding& params, const InferenceOptions& options) {
  switch (mode) {
    case InferenceMode::Argmax:
      return Categorical::point(execute_argmax(program, world, modules, params, options).result);
    case InferenceMode::Factorized: return infer_factorized(program, world, modules, params, options);
    case InferenceMode::Exact: return infer_exact(program, world, modules, params, options);
    case InferenceMode::BruteForce: return brute_force(program, world, modules, params.store(), options);
  }
  throw Error(ErrorCode::InternalError, "unknown inference mode");
}

nlohmann::ordered_json inference_json(const Categorical& dist, InferenceMode mode, std::string_view program_id) {
  nlohmann::ordered_json support = nlohmann::ordered_json::array();
  nlohmann::ordered_json probs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    support.push_back(to_json(dist.support()[i]));
    probs.push_back(dist.probs()[i].value());
  }
  return {{"mode", to_string(mode)}, {"program_id", program_id}, {"support", support}, {"probs", probs}};
}

}  // namespace vpg::engine
