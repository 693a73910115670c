#include "vpg/engine/lineage.hpp"

#include <algorithm>
#include <set>

#include "vpg/toy/module.hpp"
#include "vpg/util/error.hpp"

namespace vpg::engine {
namespace {

const dsl::Statement& producer_of(const dsl::Program& program, std::string_view var) {
  const dsl::Statement* st = program.producer(var);
  if (!st) throw Error(ErrorCode::InternalError, "no statement assigns " + std::string(var));
  return *st;
}

void sort_by_statement(const dsl::Program& program, std::vector<std::string>& vars) {
  std::sort(vars.begin(), vars.end(), [&](const std::string& a, const std::string& b) {
    return program.index_of(a).value_or(0) < program.index_of(b).value_or(0);
  });
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
}

}  // namespace

Region input_region(const synth::World& world, std::string_view name) {
  const auto idx = world.index_of(name);
  if (!idx) throw Error(ErrorCode::ModuleFailure, "input image " + std::string(name) + " is not part of this case");
  return world.whole(*idx);
}

std::vector<std::string> region_inputs(const dsl::Program& program, std::string_view image_var,
                                       const Interventions& interventions) {
  std::vector<std::string> out;
  std::string var(image_var);
  while (!dsl::is_input_image(var) && !interventions.count(var)) {
    const auto& st = producer_of(program, var);
    if (!dsl::is_crop(st.module)) throw Error(ErrorCode::InternalError, var + " is not an image");
    out.push_back(st.arg("box").text);
    var = st.arg("image").text;
  }
  sort_by_statement(program, out);
  return out;
}

std::vector<std::string> direct_inputs(const dsl::Program& program, std::size_t statement,
                                       const Interventions& interventions) {
  const auto& st = program.statements.at(statement);
  switch (st.module) {
    case dsl::ModuleKind::Loc:
    case dsl::ModuleKind::Vqa:
      return region_inputs(program, st.arg("image").text, interventions);
    case dsl::ModuleKind::Count:
      return {st.arg("box").text};
    case dsl::ModuleKind::Eval:
      return evalexpr::referenced_vars(*st.eval);
    case dsl::ModuleKind::Result:
      return {st.arg("var").text};
    default:
      return region_inputs(program, st.target, {});
  }
}

std::vector<std::string> loc_closure(const dsl::Program& program, const std::vector<std::string>& vars,
                                     const Interventions& interventions) {
  std::set<std::string> seen;
  std::vector<std::string> stack = vars;
  std::vector<std::string> out;
  while (!stack.empty()) {
    const std::string v = stack.back();
    stack.pop_back();
    if (!seen.insert(v).second) continue;
    const auto idx = program.index_of(v);
    if (!idx) continue;
    const auto& st = program.statements[*idx];
    if (st.module == dsl::ModuleKind::Loc) out.push_back(v);
    if (interventions.count(v)) continue;
    if (st.module == dsl::ModuleKind::Loc || st.module == dsl::ModuleKind::Vqa) {
      for (auto& u : region_inputs(program, st.arg("image").text, interventions)) stack.push_back(u);
    } else if (st.module == dsl::ModuleKind::Count) {
      stack.push_back(st.arg("box").text);
    }
  }
  sort_by_statement(program, out);
  return out;
}

Region resolve_region(const dsl::Program& program, const synth::World& world, std::string_view image_var,
                      const std::function<const Value&(std::string_view)>& value_of,
                      const Interventions& interventions) {
  if (auto it = interventions.find(image_var); it != interventions.end()) {
    if (!it->second.is_region()) throw Error(ErrorCode::InvalidData, "intervention on " + it->first + " must be a region");
    return it->second.as_region();
  }
  if (dsl::is_input_image(image_var)) return input_region(world, image_var);
  const auto& st = producer_of(program, image_var);
  const Region base = resolve_region(program, world, st.arg("image").text, value_of, interventions);
  const Value& box = value_of(st.arg("box").text);
  if (!box.is_detection()) throw Error(ErrorCode::InternalError, st.arg("box").text + " does not hold a detection");
  return toy::crop(base, box.as_detection(), st.module);
}

}  // namespace vpg::engine
