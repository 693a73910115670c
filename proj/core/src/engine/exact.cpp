#include <algorithm>
#include <map>

#include "vpg/engine/factor.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/evalexpr/semantics.hpp"
#include "vpg/util/error.hpp"

namespace vpg::engine {
namespace {

std::size_t index_in(std::vector<Value>& support, const Value& v) {
  auto it = std::find(support.begin(), support.end(), v);
  if (it != support.end()) return static_cast<std::size_t>(it - support.begin());
  support.push_back(v);
  return support.size() - 1;
}

}  // namespace

Categorical infer_exact(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                        diff::ParamBinding& params, const InferenceOptions& options) {
  const auto& interventions = options.interventions;
  std::map<std::string, std::vector<Value>, std::less<>> supports;
  std::vector<Factor> factors;
  std::map<std::pair<std::size_t, Region>, Categorical> cache;
  std::string query;

  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& st = program.statements[i];
    if (dsl::is_crop(st.module)) continue;  // folded into the regions of their consumers
    if (st.module == dsl::ModuleKind::Result) {
      if (auto it = interventions.find(st.target); it != interventions.end()) return Categorical::point(it->second);
      query = st.arg("var").text;
      continue;
    }
    if (auto it = interventions.find(st.target); it != interventions.end()) {
      supports[st.target] = {it->second};
      factors.push_back(Factor{{st.target}, {1}, {diff::Scalar(1.0)}});
      continue;
    }

    const auto parents = direct_inputs(program, i, interventions);
    std::vector<std::size_t> cards;
    std::size_t rows = 1;
    for (const auto& p : parents) {
      cards.push_back(supports.at(p).size());
      rows *= cards.back();
      if (rows > options.max_factor_entries) {
        throw Error(ErrorCode::SupportExplosion, st.target + ": parent assignments exceed the factor cap");
      }
    }

    // One conditional per parent assignment: a module distribution, or the
    // single value a deterministic statement computes.
    std::vector<Categorical> conditionals;
    std::vector<std::size_t> det_index;
    std::vector<Value> support;
    if (st.module == dsl::ModuleKind::Eval && st.eval->kind == evalexpr::EvalAst::Kind::Bool) {
      support = {kTrue, kFalse};
    }
    evalexpr::Env env;
    auto value_of = [&](std::string_view v) -> const Value& {
      auto it = env.find(v);
      if (it == env.end()) throw Error(ErrorCode::InternalError, "unassigned parent " + std::string(v));
      return it->second;
    };
    for (std::size_t row = 0; row < rows; ++row) {
      std::size_t rest = row;
      for (std::size_t k = parents.size(); k-- > 0;) {
        env.insert_or_assign(parents[k], supports.at(parents[k])[rest % cards[k]]);
        rest /= cards[k];
      }
      switch (st.module) {
        case dsl::ModuleKind::Loc:
        case dsl::ModuleKind::Vqa: {
          const Region region = resolve_region(program, world, st.arg("image").text, value_of, interventions);
          auto it = cache.find({i, region});
          if (it == cache.end()) it = cache.emplace(std::pair{i, region}, call_module(st, world, modules, params, region)).first;
          for (const auto& v : it->second.support()) index_in(support, v);
          conditionals.push_back(it->second);
          break;
        }
        case dsl::ModuleKind::Count:
          det_index.push_back(index_in(support, Value(toy::count(value_of(st.arg("box").text).as_detection()))));
          break;
        case dsl::ModuleKind::Eval:
          det_index.push_back(index_in(support, evalexpr::evaluate(*st.eval, env)));
          break;
        default:
          throw Error(ErrorCode::InternalError, "unexpected statement in exact inference");
      }
    }

    Factor f;
    f.scope = parents;
    f.scope.push_back(st.target);
    f.cards = cards;
    f.cards.push_back(support.size());
    if (f.entries() > options.max_factor_entries) {
      throw Error(ErrorCode::SupportExplosion, st.target + ": factor needs " + std::to_string(f.entries()) +
                                                   " entries (cap " + std::to_string(options.max_factor_entries) + ")");
    }
    f.table.assign(f.entries(), diff::Scalar(0.0));
    for (std::size_t row = 0; row < rows; ++row) {
      if (conditionals.empty()) {
        f.table[row * support.size() + det_index[row]] = diff::Scalar(1.0);
        continue;
      }
      const auto& c = conditionals[row];
      for (std::size_t j = 0; j < c.size(); ++j) {
        const auto col = static_cast<std::size_t>(std::find(support.begin(), support.end(), c.support()[j]) - support.begin());
        f.table[row * support.size() + col] = c.probs()[j];
      }
    }
    supports[st.target] = std::move(support);
    factors.push_back(std::move(f));
  }

  if (query.empty()) throw Error(ErrorCode::InternalError, "program without RESULT reached inference");
  const std::vector<std::string> keep = {query};
  const auto order = elimination_order(factors, keep);
  const Factor result = eliminate(std::move(factors), order, keep, options.max_factor_entries);
  return Categorical(supports.at(query), result.table);
}

}  // namespace vpg::engine
