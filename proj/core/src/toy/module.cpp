#include "vpg/toy/module.hpp"

#include <algorithm>

#include "vpg/toy/toy_modules.hpp"
#include "vpg/util/error.hpp"

namespace vpg::toy {
namespace {

std::vector<Value> tokens(const std::vector<std::string>& words) {
  std::vector<Value> out;
  for (const auto& w : words) out.push_back(Value::token(w));
  return out;
}

std::vector<Value> yes_no() { return {Value::token("yes"), Value::token("no")}; }

// Splits a pattern into literal pieces around "{obj}" / "{attr}" slots.
struct Piece {
  bool slot;
  std::string text;  // literal text, or "obj"/"attr"
};

std::vector<Piece> pieces(std::string_view pattern) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const std::size_t open = pattern.find('{', i);
    if (open == std::string_view::npos) {
      out.push_back({false, std::string(pattern.substr(i))});
      break;
    }
    if (open > i) out.push_back({false, std::string(pattern.substr(i, open - i))});
    const std::size_t close = pattern.find('}', open);
    out.push_back({true, std::string(pattern.substr(open + 1, close - open - 1))});
    i = close + 1;
  }
  return out;
}

// Backtracking match; slot values are non-empty.
bool match(const std::vector<Piece>& ps, std::size_t k, std::string_view s, std::size_t pos,
           std::vector<std::pair<std::string, std::string>>& slots) {
  if (k == ps.size()) return pos == s.size();
  const Piece& p = ps[k];
  if (!p.slot) {
    if (s.substr(pos, p.text.size()) != p.text) return false;
    return match(ps, k + 1, s, pos + p.text.size(), slots);
  }
  for (std::size_t end = pos + 1; end <= s.size(); ++end) {
    slots.emplace_back(p.text, std::string(s.substr(pos, end - pos)));
    if (match(ps, k + 1, s, end, slots)) return true;
    slots.pop_back();
  }
  return false;
}

std::vector<const synth::Object*> objects_of(const synth::World& world, const Region& region,
                                             std::string_view object) {
  std::vector<const synth::Object*> out;
  const auto& scene = world.scene(region.image);
  for (const auto& o : scene.objects) {
    if (o.category == object && region.contains(o.cell)) out.push_back(&o);
  }
  std::sort(out.begin(), out.end(), [](const synth::Object* a, const synth::Object* b) { return a->cell < b->cell; });
  return out;
}

}  // namespace

void ModuleSet::register_params(diff::ParamStore& store) const {
  if (loc) loc->register_params(store);
  if (vqa) vqa->register_params(store);
}

ModuleRegistry& ModuleRegistry::global() {
  static ModuleRegistry registry = [] {
    ModuleRegistry r;
    r.add("toy", [](const ModuleOptions& o) {
      return ModuleSet{"toy", std::make_shared<ToyLoc>(o.loc), std::make_shared<ToyVqa>()};
    });
    r.add("oracle", [](const ModuleOptions&) {
      return ModuleSet{"oracle", std::make_shared<OracleLoc>(), std::make_shared<OracleVqa>()};
    });
    r.add("fixture", [](const ModuleOptions& o) {
      const auto& f = o.fixture;
      auto part = [&](const char* key) {
        return f.is_object() && f.contains(key) ? f.at(key) : nlohmann::ordered_json::array();
      };
      return ModuleSet{"fixture", std::make_shared<FixtureLoc>(part("loc")), std::make_shared<FixtureVqa>(part("vqa"))};
    });
    return r;
  }();
  return registry;
}

void ModuleRegistry::add(std::string name, Factory factory) {
  for (auto& [n, f] : factories_) {
    if (n == name) {
      f = std::move(factory);
      return;
    }
  }
  factories_.emplace_back(std::move(name), std::move(factory));
}

ModuleSet ModuleRegistry::create(std::string_view name, const ModuleOptions& options) const {
  for (const auto& [n, f] : factories_) {
    if (n == name) return f(options);
  }
  throw Error(ErrorCode::ConfigError, "unknown module set '" + std::string(name) + "'");
}

std::vector<std::string> ModuleRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, f] : factories_) out.push_back(n);
  return out;
}

const std::vector<QuestionTemplate>& question_templates() {
  static const std::vector<QuestionTemplate> t = [] {
    std::vector<Value> counts;
    for (int i = 0; i <= synth::Vocabulary::kMaxPerCategory; ++i) counts.emplace_back(i);
    return std::vector<QuestionTemplate>{
        {"color_query", "What color is the {obj}?", SlotKind::None, tokens(synth::Vocabulary::colors())},
        {"material_query", "What is the {obj} made of?", SlotKind::None, tokens(synth::Vocabulary::materials())},
        {"activity_query", "What is the {obj} doing?", SlotKind::None, tokens(synth::Vocabulary::activities())},
        {"color_verify", "Does the {obj} have {attr} color?", SlotKind::Color, yes_no()},
        {"material_verify", "Is the {obj} made of {attr}?", SlotKind::Material, yes_no()},
        {"activity_verify", "Is the {obj} {attr}?", SlotKind::Activity, yes_no()},
        {"count", "How many {obj}s are in the image?", SlotKind::None, counts},
        {"exist", "Is there a {obj}?", SlotKind::None, yes_no()},
    };
  }();
  return t;
}

const QuestionTemplate& question_template(std::string_view id) {
  for (const auto& t : question_templates()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::UnknownTemplate, "no question template '" + std::string(id) + "'");
}

const std::vector<std::string>& slot_vocabulary(SlotKind kind) {
  static const std::vector<std::string> none;
  switch (kind) {
    case SlotKind::Color: return synth::Vocabulary::colors();
    case SlotKind::Material: return synth::Vocabulary::materials();
    case SlotKind::Activity: return synth::Vocabulary::activities();
    case SlotKind::None: return none;
  }
  return none;
}

ParsedQuestion parse_question(std::string_view question, const std::vector<QuestionTemplate>& templates) {
  std::string oov;
  for (const auto& t : templates) {
    std::vector<std::pair<std::string, std::string>> slots;
    if (!match(pieces(t.pattern), 0, question, 0, slots)) continue;
    ParsedQuestion q;
    q.tmpl = &t;
    for (const auto& [slot, word] : slots) (slot == "obj" ? q.object : q.attribute) = word;
    const auto& attrs = slot_vocabulary(t.attribute);
    if (!synth::Vocabulary::category_index(q.object)) {
      oov = "unknown object '" + q.object + "'";
      continue;
    }
    if (t.attribute != SlotKind::None && std::find(attrs.begin(), attrs.end(), q.attribute) == attrs.end()) {
      oov = "unknown attribute '" + q.attribute + "'";
      continue;
    }
    return q;
  }
  if (!oov.empty()) throw Error(ErrorCode::OutOfVocabulary, oov + " in question '" + std::string(question) + "'");
  throw Error(ErrorCode::UnknownTemplate, "question '" + std::string(question) + "' matches no template");
}

std::string render_question(const QuestionTemplate& tmpl, std::string_view object, std::string_view attribute) {
  std::string out;
  for (const auto& p : pieces(tmpl.pattern)) {
    if (!p.slot) out += p.text;
    else out += p.text == "obj" ? object : attribute;
  }
  return out;
}

Detection true_detection(const synth::World& world, const Region& image, std::string_view object) {
  if (!synth::Vocabulary::category_index(object)) {
    throw Error(ErrorCode::OutOfVocabulary, "unknown object '" + std::string(object) + "'");
  }
  Detection d{image.image, {}};
  for (const auto* o : objects_of(world, image, object)) d.boxes.push_back(o->cell);
  return d;
}

Value true_answer(const synth::World& world, const Region& region, std::string_view question) {
  const ParsedQuestion q = parse_question(question);
  const auto objs = objects_of(world, region, q.object);
  const std::string& id = q.tmpl->id;
  const synth::Object* first = objs.empty() ? nullptr : objs.front();
  auto yn = [](bool b) { return Value::token(b ? "yes" : "no"); };
  if (id == "color_query") return first ? Value::token(first->color) : q.tmpl->answers.front();
  if (id == "material_query") return first ? Value::token(first->material) : q.tmpl->answers.front();
  if (id == "activity_query") return first ? Value::token(first->activity) : q.tmpl->answers.front();
  if (id == "color_verify") return yn(first && first->color == q.attribute);
  if (id == "material_verify") return yn(first && first->material == q.attribute);
  if (id == "activity_verify") return yn(first && first->activity == q.attribute);
  if (id == "count") return Value(static_cast<std::int64_t>(objs.size()));
  if (id == "exist") return yn(first != nullptr);
  throw Error(ErrorCode::UnknownTemplate, "no ground truth for template '" + id + "'");
}

Region crop(const Region& image, const Detection& detection, dsl::ModuleKind kind) {
  using dsl::ModuleKind;
  if (detection.boxes.empty() || detection.image != image.image) return image;
  const Cell b = detection.boxes.front();
  Region r = image;
  switch (kind) {
    case ModuleKind::Crop:
      if (image.contains(b)) r = Region{image.image, b.row, b.col, b.row + 1, b.col + 1};
      return r;
    case ModuleKind::CropRightOf:
      r.col0 = std::max(image.col0, b.col + 1);
      if (r.col0 >= r.col1) r.col0 = r.col1 - 1;
      return r;
    case ModuleKind::CropLeftOf:
      r.col1 = std::min(image.col1, b.col);
      if (r.col1 <= r.col0) r.col1 = r.col0 + 1;
      return r;
    case ModuleKind::CropBelow:
    case ModuleKind::CropInFrontOf:
      r.row0 = std::max(image.row0, b.row + 1);
      if (r.row0 >= r.row1) r.row0 = r.row1 - 1;
      return r;
    case ModuleKind::CropAbove:
    case ModuleKind::CropBehind:
      r.row1 = std::min(image.row1, b.row);
      if (r.row1 <= r.row0) r.row1 = r.row0 + 1;
      return r;
    default:
      throw Error(ErrorCode::InternalError, "crop called with a non-CROP module");
  }
}

std::int64_t count(const Detection& detection) { return static_cast<std::int64_t>(detection.boxes.size()); }

}  // namespace vpg::toy
