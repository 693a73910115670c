#include <functional>
#include <map>

#include "vpg/engine/inference.hpp"
#include "vpg/evalexpr/semantics.hpp"
#include "vpg/util/error.hpp"

namespace vpg::engine {

Categorical infer_factorized(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                             diff::ParamBinding& params, const InferenceOptions& options) {
  const auto& interventions = options.interventions;
  evalexpr::DistMap marginals;
  std::map<std::pair<std::size_t, Region>, Categorical> cache;

  auto conditional = [&](const std::string& var, const evalexpr::Env& env) -> const Categorical& {
    const std::size_t i = *program.index_of(var);
    const auto& st = program.statements[i];
    auto value_of = [&](std::string_view v) -> const Value& {
      auto it = env.find(v);
      if (it == env.end()) throw Error(ErrorCode::InternalError, "unassigned ancestor " + std::string(v));
      return it->second;
    };
    const Region region = resolve_region(program, world, st.arg("image").text, value_of, interventions);
    auto it = cache.find({i, region});
    if (it == cache.end()) it = cache.emplace(std::pair{i, region}, call_module(st, world, modules, params, region)).first;
    return it->second;
  };

  // Marginal of a LOC/VQA output: sum over the joint of its own LOC ancestors,
  // each conditioned on the ancestors before it.
  auto module_marginal = [&](const std::string& target) {
    std::vector<std::string> ancestors;
    for (auto& v : loc_closure(program, {target}, interventions)) {
      if (v != target) ancestors.push_back(std::move(v));
    }
    CategoricalBuilder out;
    evalexpr::Env env;
    std::size_t leaves = 0;
    std::function<void(std::size_t, const diff::Scalar&)> walk = [&](std::size_t k, const diff::Scalar& weight) {
      if (k == ancestors.size()) {
        if (++leaves > options.max_assignments * 10) {
          throw Error(ErrorCode::SupportExplosion, target + ": too many ancestor assignments");
        }
        const Categorical& c = conditional(target, env);
        for (std::size_t j = 0; j < c.size(); ++j) out.add(c.support()[j], weight * c.probs()[j]);
        return;
      }
      const std::string& a = ancestors[k];
      if (auto it = interventions.find(a); it != interventions.end()) {
        env.insert_or_assign(a, it->second);
        walk(k + 1, weight);
        return;
      }
      const Categorical c = conditional(a, env);
      for (std::size_t j = 0; j < c.size(); ++j) {
        env.insert_or_assign(a, c.support()[j]);
        walk(k + 1, weight * c.probs()[j]);
      }
    };
    walk(0, diff::Scalar(1.0));
    return out.build();
  };

  for (const auto& st : program.statements) {
    if (dsl::is_crop(st.module)) continue;
    if (auto it = interventions.find(st.target); it != interventions.end()) {
      marginals.insert_or_assign(st.target, Categorical::point(it->second));
      if (st.module == dsl::ModuleKind::Result) return marginals.at(st.target);
      continue;
    }
    switch (st.module) {
      case dsl::ModuleKind::Loc:
      case dsl::ModuleKind::Vqa:
        marginals.insert_or_assign(st.target, module_marginal(st.target));
        break;
      case dsl::ModuleKind::Count: {
        const Categorical& boxes = marginals.at(st.arg("box").text);
        CategoricalBuilder out;
        for (std::size_t j = 0; j < boxes.size(); ++j) {
          out.add(Value(toy::count(boxes.support()[j].as_detection())), boxes.probs()[j]);
        }
        marginals.insert_or_assign(st.target, out.build());
        break;
      }
      case dsl::ModuleKind::Eval:
        marginals.insert_or_assign(st.target, evalexpr::eval_distribution(*st.eval, marginals));
        break;
      case dsl::ModuleKind::Result:
        return marginals.at(st.arg("var").text);
      default:
        break;
    }
  }
  throw Error(ErrorCode::InternalError, "program without RESULT reached inference");
}

}  // namespace vpg::engine
