#include "vpg/synth/templates.hpp"

#include <algorithm>
#include <array>

#include "vpg/toy/module.hpp"
#include "vpg/util/error.hpp"

namespace vpg::synth {

namespace {

using Lines = std::vector<std::string>;

std::string join(const Lines& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string q(std::string_view s) { return "'" + std::string(s) + "'"; }

std::string loc(int i, std::string_view image, std::string_view object) {
  return "BOX" + std::to_string(i) + "=LOC(image=" + std::string(image) + ",object=" + q(object) + ")";
}
std::string crop(int i, std::string_view module, std::string_view image, int box) {
  return "IMAGE" + std::to_string(i) + "=" + std::string(module) + "(image=" + std::string(image) + ",box=BOX" +
         std::to_string(box) + ")";
}
std::string vqa(int i, std::string_view image, std::string_view question) {
  return "ANSWER" + std::to_string(i) + "=VQA(image=" + std::string(image) + ",question=" + q(question) + ")";
}
std::string count(int i, int box) {
  return "ANSWER" + std::to_string(i) + "=COUNT(box=BOX" + std::to_string(box) + ")";
}
std::string eval(int i, std::string_view expr) {
  return "ANSWER" + std::to_string(i) + "=EVAL(expr=\"" + std::string(expr) + "\")";
}
std::string result(int i) { return "FINAL_RESULT=RESULT(var=ANSWER" + std::to_string(i) + ")"; }

std::string ask(std::string_view tmpl, std::string_view object, std::string_view attr = {}) {
  return toy::render_question(toy::question_template(tmpl), object, attr);
}

// ---- scene surgery ------------------------------------------------------

int count_of(const Scene& s, std::string_view cat) {
  return static_cast<int>(std::count_if(s.objects.begin(), s.objects.end(),
                                        [&](const Object& o) { return o.category == cat; }));
}

void remove_all(Scene& s, std::string_view cat, const Region* within = nullptr) {
  std::erase_if(s.objects, [&](const Object& o) { return o.category == cat && (!within || within->contains(o.cell)); });
}

Object random_object(Rng& rng, std::string cat, Cell cell) {
  return {cell, std::move(cat), rng.pick(Vocabulary::colors()), rng.pick(Vocabulary::materials()),
          rng.pick(Vocabulary::activities())};
}

// Puts a `cat` object on a free cell of `within` (the whole scene by
// default). With no free cell, an object other than the one at `keep` is
// overwritten. Returns the object's index.
std::size_t plant(Scene& s, Rng& rng, const std::string& cat, std::optional<Region> within = {},
                  std::optional<Cell> keep = {}) {
  const Region r = within.value_or(Region{0, 0, 0, s.rows, s.cols});
  if (count_of(s, cat) >= Vocabulary::kMaxPerCategory) {
    for (std::size_t i = s.objects.size(); i-- > 0;) {
      if (s.objects[i].category == cat && (!keep || s.objects[i].cell != *keep)) {
        s.objects.erase(s.objects.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
  std::vector<Cell> free;
  std::vector<std::size_t> taken;
  for (int row = r.row0; row < r.row1; ++row) {
    for (int col = r.col0; col < r.col1; ++col) {
      const Cell c{row, col};
      if (const Object* o = s.at(c)) {
        if (!keep || c != *keep) taken.push_back(static_cast<std::size_t>(o - s.objects.data()));
      } else {
        free.push_back(c);
      }
    }
  }
  if (!free.empty()) {
    s.objects.push_back(random_object(rng, cat, rng.pick(free)));
    return s.objects.size() - 1;
  }
  if (taken.empty()) throw Error(ErrorCode::InternalError, "no room to plant '" + cat + "'");
  const std::size_t i = rng.pick(taken);
  s.objects[i] = random_object(rng, cat, s.objects[i].cell);
  return i;
}

void set_count(Scene& s, Rng& rng, const std::string& cat, int n) {
  remove_all(s, cat);
  for (int i = 0; i < n; ++i) plant(s, rng, cat);
}

std::size_t make_unique(Scene& s, Rng& rng, const std::string& cat) {
  remove_all(s, cat);
  return plant(s, rng, cat);
}

void finish(Scene& s) {
  std::sort(s.objects.begin(), s.objects.end(), [](const Object& a, const Object& b) { return a.cell < b.cell; });
}

World single(Scene s) {
  finish(s);
  return {{"IMAGE"}, {std::move(s)}};
}

World two_images(Scene a, Scene b) {
  finish(a);
  finish(b);
  return {{"LEFT", "RIGHT"}, {std::move(a), std::move(b)}};
}

const std::string& category(Rng& rng) { return rng.pick(Vocabulary::categories()); }

std::pair<std::string, std::string> two_categories(Rng& rng) {
  const auto& cats = Vocabulary::categories();
  const std::size_t a = rng.below(cats.size());
  std::size_t b = rng.below(cats.size() - 1);
  if (b >= a) ++b;
  return {cats[a], cats[b]};
}

std::string other_than(Rng& rng, const std::vector<std::string>& vocab, std::string_view value) {
  std::vector<std::string> rest;
  for (const auto& v : vocab) {
    if (v != value) rest.push_back(v);
  }
  return rng.pick(rest);
}

// ---- templates ----------------------------------------------------------

Instance exist(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  if (want && count_of(s, x) == 0) plant(s, rng, x);
  if (!want) remove_all(s, x);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), count(0, 0), eval(1, "'yes' if {ANSWER0} > 0 else 'no'"), result(1)}),
          "Is there a " + x + "?"};
}

Instance count_query(Rng& rng, bool, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  set_count(s, rng, x, static_cast<int>(rng.between(0, Vocabulary::kMaxPerCategory)));
  return {single(std::move(s)), join({loc(0, "IMAGE", x), count(0, 0), result(0)}),
          "How many " + x + "s are in the image?"};
}

Instance count_threshold(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene left = gen_scene(rng.next(), cfg);
  Scene right = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  const int k = static_cast<int>(rng.between(1, Vocabulary::kMaxPerCategory));
  const int n = want ? static_cast<int>(rng.between(k, Vocabulary::kMaxPerCategory))
                     : static_cast<int>(rng.between(0, k - 1));
  set_count(left, rng, x, n);
  return {two_images(std::move(left), std::move(right)),
          join({vqa(0, "LEFT", ask("count", x)), eval(1, "{ANSWER0} >= " + std::to_string(k)), result(1)}),
          "There are at least " + std::to_string(k) + " " + x + "s in the left image."};
}

Instance image_exist(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  if (want && count_of(s, x) == 0) plant(s, rng, x);
  if (!want) remove_all(s, x);
  return {single(std::move(s)), join({vqa(0, "IMAGE", ask("exist", x)), result(0)}), "Is there a " + x + "?"};
}

Instance attribute_query(Rng& rng, const SceneConfig& cfg, std::string_view tmpl) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  make_unique(s, rng, x);
  const std::string sub = ask(tmpl, x);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), vqa(0, "IMAGE0", sub), result(0)}), sub};
}

Instance color_query(Rng& rng, bool, const SceneConfig& cfg) { return attribute_query(rng, cfg, "color_query"); }

Instance activity_query(Rng& rng, bool, const SceneConfig& cfg) { return attribute_query(rng, cfg, "activity_query"); }

Instance attribute_verify(Rng& rng, bool want, const SceneConfig& cfg, std::string_view tmpl,
                          const std::vector<std::string>& vocab, std::string Object::*field) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  const std::size_t i = make_unique(s, rng, x);
  const std::string actual = s.objects[i].*field;
  const std::string attr = want ? actual : other_than(rng, vocab, actual);
  const std::string sub = ask(tmpl, x, attr);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), vqa(0, "IMAGE0", sub), result(0)}), sub};
}

Instance color_verify(Rng& rng, bool want, const SceneConfig& cfg) {
  return attribute_verify(rng, want, cfg, "color_verify", Vocabulary::colors(), &Object::color);
}

Instance material_verify(Rng& rng, bool want, const SceneConfig& cfg) {
  return attribute_verify(rng, want, cfg, "material_verify", Vocabulary::materials(), &Object::material);
}

Instance exist_or(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  remove_all(s, x);
  remove_all(s, y);
  if (want) {
    const auto which = rng.below(3);
    if (which != 1) plant(s, rng, x);
    if (which != 0) plant(s, rng, y);
  }
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), count(0, 0), loc(1, "IMAGE", y), count(1, 1),
                eval(2, "'yes' if {ANSWER0} > 0 or {ANSWER1} > 0 else 'no'"), result(2)}),
          "Is there a " + x + " or a " + y + "?"};
}

struct Direction {
  const char* module;
  const char* phrase;
  dsl::ModuleKind kind;
};

Instance spatial_exist(Rng& rng, bool want, const SceneConfig& cfg) {
  static const std::array<Direction, 4> dirs{{
      {"CROP_RIGHTOF", "to the right of", dsl::ModuleKind::CropRightOf},
      {"CROP_LEFTOF", "to the left of", dsl::ModuleKind::CropLeftOf},
      {"CROP_BELOW", "below", dsl::ModuleKind::CropBelow},
      {"CROP_ABOVE", "above", dsl::ModuleKind::CropAbove},
  }};
  const Direction& d = rng.pick(dirs);
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  remove_all(s, x);
  // Anchor away from the edge the half-plane points to, so the half-plane is
  // non-empty and excludes the anchor.
  Region anchor_area{0, 0, 0, s.rows, s.cols};
  switch (d.kind) {
    case dsl::ModuleKind::CropRightOf: anchor_area.col1 -= 1; break;
    case dsl::ModuleKind::CropLeftOf: anchor_area.col0 += 1; break;
    case dsl::ModuleKind::CropBelow: anchor_area.row1 -= 1; break;
    default: anchor_area.row0 += 1; break;
  }
  const std::size_t ai = plant(s, rng, x, anchor_area);
  const Cell anchor = s.objects[ai].cell;
  const Region half = toy::crop(Region{0, 0, 0, s.rows, s.cols}, Detection{0, {anchor}}, d.kind);
  remove_all(s, y, &half);
  if (want) plant(s, rng, y, half, anchor);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, d.module, "IMAGE", 0), loc(1, "IMAGE0", y), count(0, 1),
                eval(1, "'yes' if {ANSWER0} > 0 else 'no'"), result(1)}),
          "Is there a " + y + " " + d.phrase + " the " + x + "?"};
}

Instance count_sum(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene left = gen_scene(rng.next(), cfg);
  Scene right = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  const int a = static_cast<int>(rng.between(0, Vocabulary::kMaxPerCategory));
  const int b = static_cast<int>(rng.between(0, Vocabulary::kMaxPerCategory));
  set_count(left, rng, x, a);
  set_count(right, rng, x, b);
  int n = a + b;
  if (!want) {
    static const std::array<int, 4> offsets{-2, -1, 1, 2};
    do {
      n = a + b + rng.pick(offsets);
    } while (n < 0);
  }
  const std::string ns = std::to_string(n);
  return {two_images(std::move(left), std::move(right)),
          join({vqa(0, "LEFT", ask("count", x)), vqa(1, "RIGHT", ask("count", x)),
                eval(2, "{ANSWER0} + {ANSWER1} == " + ns), result(2)}),
          "There are " + ns + " " + x + "s in total across the two images."};
}

Instance xor_images(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene left = gen_scene(rng.next(), cfg);
  Scene right = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  const bool in_left = rng.chance(0.5);
  const bool in_right = want ? !in_left : in_left;
  set_count(left, rng, x, in_left ? static_cast<int>(rng.between(1, 2)) : 0);
  set_count(right, rng, x, in_right ? static_cast<int>(rng.between(1, 2)) : 0);
  return {two_images(std::move(left), std::move(right)),
          join({vqa(0, "LEFT", ask("exist", x)), vqa(1, "RIGHT", ask("exist", x)),
                eval(2, "{ANSWER0} == 'yes' xor {ANSWER1} == 'yes'"), result(2)}),
          "Exactly one of the two images contains a " + x + "."};
}

// Which of two conditions hold: both for a positive label, otherwise one of
// the three failing combinations.
std::pair<bool, bool> conditions(Rng& rng, bool want) {
  if (want) return {true, true};
  switch (rng.below(3)) {
    case 0: return {false, true};
    case 1: return {true, false};
    default: return {false, false};
  }
}

Instance exist_and_verify(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  const auto [has_x, right_color] = conditions(rng, want);
  remove_all(s, x);
  if (has_x) plant(s, rng, x);
  const std::size_t i = make_unique(s, rng, y);
  const std::string actual = s.objects[i].color;
  const std::string c = right_color ? actual : other_than(rng, Vocabulary::colors(), actual);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), count(0, 0), loc(1, "IMAGE", y), crop(0, "CROP", "IMAGE", 1),
                vqa(1, "IMAGE0", ask("color_verify", y, c)),
                eval(2, "'yes' if {ANSWER0} > 0 and {ANSWER1} == 'yes' else 'no'"), result(2)}),
          "Is there a " + x + " and does the " + y + " have " + c + " color?"};
}

Instance count_compare_images(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene left = gen_scene(rng.next(), cfg);
  Scene right = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  const auto [more, has_y] = conditions(rng, want);
  int a = static_cast<int>(rng.between(0, Vocabulary::kMaxPerCategory));
  int b = static_cast<int>(rng.between(0, Vocabulary::kMaxPerCategory));
  if (a == b) {
    if (a == 0) a = 1;
    else b = a - 1;
  }
  if ((a > b) != more) std::swap(a, b);
  set_count(left, rng, x, a);
  set_count(right, rng, x, b);
  remove_all(left, y);
  if (has_y) plant(left, rng, y);
  return {two_images(std::move(left), std::move(right)),
          join({vqa(0, "LEFT", ask("count", x)), vqa(1, "RIGHT", ask("count", x)), vqa(2, "LEFT", ask("exist", y)),
                eval(3, "{ANSWER0} > {ANSWER1} and {ANSWER2} == 'yes'"), result(3)}),
          "The left image has more " + x + "s than the right image and contains a " + y + "."};
}

Instance color_compare(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  remove_all(s, x);
  remove_all(s, y);
  const std::size_t i = plant(s, rng, x);
  const std::size_t j = plant(s, rng, y);
  s.objects[j].color = want ? other_than(rng, Vocabulary::colors(), s.objects[i].color) : s.objects[i].color;
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), loc(1, "IMAGE", y), crop(1, "CROP", "IMAGE", 1),
                vqa(0, "IMAGE0", ask("color_query", x)), vqa(1, "IMAGE1", ask("color_query", y)),
                eval(2, "'yes' if {ANSWER0} != {ANSWER1} else 'no'"), result(2)}),
          "Do the " + x + " and the " + y + " have different colors?"};
}

Instance material_or(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  const std::string m = rng.pick(Vocabulary::materials());
  remove_all(s, x);
  remove_all(s, y);
  const std::size_t i = plant(s, rng, x);
  const std::size_t j = plant(s, rng, y);
  const auto which = rng.below(3);
  s.objects[i].material = want && which != 1 ? m : other_than(rng, Vocabulary::materials(), m);
  s.objects[j].material = want && which != 0 ? m : other_than(rng, Vocabulary::materials(), m);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), loc(1, "IMAGE", y), crop(1, "CROP", "IMAGE", 1),
                vqa(0, "IMAGE0", ask("material_verify", x, m)), vqa(1, "IMAGE1", ask("material_verify", y, m)),
                eval(2, "'yes' if {ANSWER0} == 'yes' or {ANSWER1} == 'yes' else 'no'"), result(2)}),
          "Is the " + x + " or the " + y + " made of " + m + "?"};
}

Instance conjunction_images(Rng& rng, bool want, const SceneConfig& cfg) {
  std::array<Scene, 2> scenes{gen_scene(rng.next(), cfg), gen_scene(rng.next(), cfg)};
  const auto [x, y] = two_categories(rng);
  // bit k set: the k-th (image, category) pair is present
  unsigned present = 0xF;
  if (!want) present = static_cast<unsigned>(rng.below(15));
  for (unsigned k = 0; k < 4; ++k) {
    Scene& s = scenes[k / 2];
    const std::string& cat = k % 2 == 0 ? x : y;
    remove_all(s, cat);
    if (present & (1u << k)) plant(s, rng, cat);
  }
  return {two_images(std::move(scenes[0]), std::move(scenes[1])),
          join({vqa(0, "LEFT", ask("exist", x)), vqa(1, "LEFT", ask("exist", y)), vqa(2, "RIGHT", ask("exist", x)),
                vqa(3, "RIGHT", ask("exist", y)),
                eval(4, "{ANSWER0} == 'yes' and {ANSWER1} == 'yes' and {ANSWER2} == 'yes' and {ANSWER3} == 'yes'"),
                result(4)}),
          "Both images contain a " + x + " and a " + y + "."};
}

Instance conditional_select(Rng& rng, bool, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const std::string x = category(rng);
  const std::size_t i = make_unique(s, rng, x);
  const std::string actual = s.objects[i].material;
  const std::string m = rng.chance(0.5) ? actual : other_than(rng, Vocabulary::materials(), actual);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), vqa(0, "IMAGE0", ask("material_verify", x, m)),
                vqa(1, "IMAGE0", ask("activity_query", x)), vqa(2, "IMAGE0", ask("color_query", x)),
                eval(3, "{ANSWER1} if {ANSWER0} == 'yes' else {ANSWER2}"), result(3)}),
          "If the " + x + " is made of " + m + ", what is it doing, and otherwise what color is it?"};
}

Instance same_color_material(Rng& rng, bool want, const SceneConfig& cfg) {
  Scene s = gen_scene(rng.next(), cfg);
  const auto [x, y] = two_categories(rng);
  const auto [same_color, same_material] = conditions(rng, want);
  remove_all(s, x);
  remove_all(s, y);
  const std::size_t i = plant(s, rng, x);
  const std::size_t j = plant(s, rng, y);
  const Object a = s.objects[i];
  s.objects[j].color = same_color ? a.color : other_than(rng, Vocabulary::colors(), a.color);
  s.objects[j].material = same_material ? a.material : other_than(rng, Vocabulary::materials(), a.material);
  return {single(std::move(s)),
          join({loc(0, "IMAGE", x), crop(0, "CROP", "IMAGE", 0), loc(1, "IMAGE", y), crop(1, "CROP", "IMAGE", 1),
                vqa(0, "IMAGE0", ask("color_query", x)), vqa(1, "IMAGE1", ask("color_query", y)),
                vqa(2, "IMAGE0", ask("material_query", x)), vqa(3, "IMAGE1", ask("material_query", y)),
                eval(4, "'yes' if {ANSWER0} == {ANSWER1} and {ANSWER2} == {ANSWER3} else 'no'"), result(4)}),
          "Do the " + x + " and the " + y + " have the same color and material?"};
}

}  // namespace

const std::vector<CaseTemplate>& case_templates() {
  static const std::vector<CaseTemplate> pool{
      {"exist", 1, true, exist},
      {"count_query", 1, false, count_query},
      {"count_threshold", 1, true, count_threshold},
      {"image_exist", 1, true, image_exist},
      {"color_query", 2, false, color_query},
      {"activity_query", 2, false, activity_query},
      {"color_verify", 2, true, color_verify},
      {"material_verify", 2, true, material_verify},
      {"exist_or", 2, true, exist_or},
      {"spatial_exist", 2, true, spatial_exist},
      {"count_sum", 2, true, count_sum},
      {"xor_images", 2, true, xor_images},
      {"exist_and_verify", 3, true, exist_and_verify},
      {"count_compare_images", 3, true, count_compare_images},
      {"color_compare", 4, true, color_compare},
      {"material_or", 4, true, material_or},
      {"conjunction_images", 4, true, conjunction_images},
      {"conditional_select", 4, false, conditional_select},
      {"same_color_material", 6, true, same_color_material},
  };
  return pool;
}

const CaseTemplate& case_template(std::string_view id) {
  for (const auto& t : case_templates()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::UnknownTemplate, "no case template '" + std::string(id) + "'");
}

bool is_positive_label(std::string_view label) { return label == "yes" || label == "True"; }

}  // namespace vpg::synth
