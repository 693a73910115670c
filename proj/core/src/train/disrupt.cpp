#include "vpg/train/disrupt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vpg/engine/inference.hpp"
#include "vpg/toy/module.hpp"
#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::train {

namespace {

constexpr int kMaxTries = 32;

const std::vector<dsl::ModuleKind>& crop_variants() {
  using dsl::ModuleKind;
  static const std::vector<ModuleKind> v{ModuleKind::Crop,          ModuleKind::CropRightOf, ModuleKind::CropLeftOf,
                                         ModuleKind::CropInFrontOf, ModuleKind::CropBehind,  ModuleKind::CropBelow,
                                         ModuleKind::CropAbove};
  return v;
}

std::string other(Rng& rng, const std::vector<std::string>& vocab, const std::string& value) {
  std::vector<std::string> rest;
  for (const auto& v : vocab) {
    if (v != value) rest.push_back(v);
  }
  return rng.pick(rest);
}

dsl::Arg& literal(dsl::Statement& s, std::string_view key) {
  for (auto& a : s.args) {
    if (a.key == key) return a.value;
  }
  throw Error(ErrorCode::InternalError, "statement has no " + std::string(key) + " argument");
}

// One random edit; false if the program offers nothing of the chosen kind.
bool edit(dsl::Program& p, Rng& rng) {
  std::vector<std::size_t> literals;
  std::vector<std::size_t> crops;
  for (std::size_t i = 0; i < p.statements.size(); ++i) {
    const auto m = p.statements[i].module;
    if (m == dsl::ModuleKind::Loc || m == dsl::ModuleKind::Vqa) literals.push_back(i);
    if (dsl::is_crop(m)) crops.push_back(i);
  }
  const bool swap_literal = crops.empty() || (!literals.empty() && rng.chance(0.5));
  if (swap_literal) {
    if (literals.empty()) return false;
    dsl::Statement& s = p.statements[rng.pick(literals)];
    if (s.module == dsl::ModuleKind::Loc) {
      dsl::Arg& a = literal(s, "object");
      a.text = other(rng, synth::Vocabulary::categories(), a.text);
      return true;
    }
    dsl::Arg& a = literal(s, "question");
    const toy::ParsedQuestion q = toy::parse_question(a.text);
    const auto& slots = toy::slot_vocabulary(q.tmpl->attribute);
    if (!slots.empty() && rng.chance(0.5)) {
      a.text = toy::render_question(*q.tmpl, q.object, other(rng, slots, q.attribute));
    } else {
      a.text = toy::render_question(*q.tmpl, other(rng, synth::Vocabulary::categories(), q.object), q.attribute);
    }
    return true;
  }
  dsl::Statement& s = p.statements[rng.pick(crops)];
  std::vector<dsl::ModuleKind> rest;
  for (auto k : crop_variants()) {
    if (k != s.module) rest.push_back(k);
  }
  s.module = rng.pick(rest);
  return true;
}

bool executable(const std::string& text, const synth::World& world) {
  try {
    const dsl::Program p = dsl::parse_program(text);
    static const toy::ModuleSet oracle = toy::ModuleRegistry::global().create("oracle");
    const diff::ParamStore none;
    diff::ParamBinding binding(none);
    engine::execute_argmax(p, world, oracle, binding);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::vector<synth::CaseRecord> disrupt_programs(const std::vector<synth::CaseRecord>& cases, double fraction,
                                                std::uint64_t seed, std::vector<std::size_t>* disrupted) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "disruption fraction must be in [0, 1], got " + std::to_string(fraction));
  }
  std::vector<synth::CaseRecord> out = cases;
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(cases.size())));
  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick(derive_seed(seed, "disrupt"));
  pick.shuffle(std::span<std::size_t>(order));
  order.resize(n);
  std::sort(order.begin(), order.end());

  for (std::size_t i : order) {
    synth::CaseRecord& c = out[i];
    Rng rng(derive_seed(derive_seed(seed, "disrupt-case"), static_cast<std::uint64_t>(i)));
    const dsl::Program original = dsl::parse_program(c.program_text);
    for (int t = 0; t < kMaxTries; ++t) {
      dsl::Program p = original;
      if (!edit(p, rng)) continue;
      const std::string text = dsl::print_program(p);
      if (text == c.program_text || !executable(text, c.world)) continue;
      c.program_text = text;
      break;
    }
  }
  if (disrupted) *disrupted = order;
  return out;
}

}  // namespace vpg::train
