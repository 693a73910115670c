#include <functional>
#include <map>

#include "vpg/engine/inference.hpp"
#include "vpg/evalexpr/semantics.hpp"
#include "vpg/util/error.hpp"

namespace vpg::engine {

// Executes the program once per joint assignment of the module outputs,
// carrying the path probability as a plain double. Shares no code with the
// factor machinery.
Categorical brute_force(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                        const diff::ParamStore& params, const InferenceOptions& options) {
  diff::ParamBinding binding(params);
  std::map<std::pair<std::size_t, Region>, std::vector<std::pair<Value, double>>> cache;
  std::vector<std::pair<Value, double>> mass;
  std::size_t leaves = 0;
  evalexpr::Env env;

  auto region_of = [&](const std::string& var) -> Region {
    if (dsl::is_input_image(var) && !env.count(var)) return input_region(world, var);
    return env.at(var).as_region();
  };

  std::function<void(std::size_t, double)> run = [&](std::size_t i, double weight) {
    const auto& st = program.statements[i];
    auto next = [&](Value v, double w) {
      env.insert_or_assign(st.target, std::move(v));
      if (st.module == dsl::ModuleKind::Result) {
        if (++leaves > options.max_assignments) {
          throw Error(ErrorCode::SupportExplosion,
                      "more than " + std::to_string(options.max_assignments) + " joint assignments");
        }
        const Value& r = env.at(st.target);
        for (auto& [value, p] : mass) {
          if (value == r) {
            p += w;
            return;
          }
        }
        mass.emplace_back(r, w);
        return;
      }
      run(i + 1, w);
    };

    if (auto it = options.interventions.find(st.target); it != options.interventions.end()) {
      next(it->second, weight);
      return;
    }
    switch (st.module) {
      case dsl::ModuleKind::Loc:
      case dsl::ModuleKind::Vqa: {
        const Region region = region_of(st.arg("image").text);
        auto it = cache.find({i, region});
        if (it == cache.end()) {
          const Categorical c = call_module(st, world, modules, binding, region);
          std::vector<std::pair<Value, double>> outcomes;
          for (std::size_t j = 0; j < c.size(); ++j) outcomes.emplace_back(c.support()[j], c.probs()[j].value());
          it = cache.emplace(std::pair{i, region}, std::move(outcomes)).first;
        }
        const auto outcomes = it->second;
        for (const auto& [v, p] : outcomes) {
          if (p > 0.0) next(v, weight * p);
        }
        return;
      }
      case dsl::ModuleKind::Count:
        next(Value(toy::count(env.at(st.arg("box").text).as_detection())), weight);
        return;
      case dsl::ModuleKind::Eval:
        next(evalexpr::evaluate(*st.eval, env), weight);
        return;
      case dsl::ModuleKind::Result:
        next(env.at(st.arg("var").text), weight);
        return;
      default:
        next(toy::crop(region_of(st.arg("image").text), env.at(st.arg("box").text).as_detection(), st.module),
             weight);
        return;
    }
  };
  run(0, 1.0);

  std::vector<Value> support;
  std::vector<diff::Scalar> probs;
  for (auto& [v, p] : mass) {
    support.push_back(std::move(v));
    probs.emplace_back(p);
  }
  return Categorical(std::move(support), std::move(probs));
}

}  // namespace vpg::engine
