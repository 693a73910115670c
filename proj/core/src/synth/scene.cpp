#include "vpg/synth/scene.hpp"

#include <algorithm>
#include <set>

#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::synth {
namespace {

std::size_t index_in(const std::vector<std::string>& vocab, const std::string& v, const char* what) {
  auto it = std::find(vocab.begin(), vocab.end(), v);
  if (it == vocab.end()) throw Error(ErrorCode::InvalidData, std::string("unknown ") + what + " '" + v + "'");
  return static_cast<std::size_t>(it - vocab.begin());
}

}  // namespace

const std::vector<std::string>& Vocabulary::categories() {
  static const std::vector<std::string> v = {"post", "sign", "laptop", "chair", "dog", "cup", "bottle", "mirror"};
  return v;
}
const std::vector<std::string>& Vocabulary::colors() {
  static const std::vector<std::string> v = {"red", "blue", "green", "white", "black", "yellow"};
  return v;
}
const std::vector<std::string>& Vocabulary::materials() {
  static const std::vector<std::string> v = {"plastic", "wood", "metal"};
  return v;
}
const std::vector<std::string>& Vocabulary::activities() {
  static const std::vector<std::string> v = {"standing", "sitting", "walking"};
  return v;
}

std::optional<std::size_t> Vocabulary::category_index(std::string_view name) {
  const auto& c = categories();
  auto it = std::find(c.begin(), c.end(), name);
  if (it == c.end()) return std::nullopt;
  return static_cast<std::size_t>(it - c.begin());
}

const Object* Scene::at(Cell c) const {
  for (const auto& o : objects) {
    if (o.cell == c) return &o;
  }
  return nullptr;
}

void Scene::validate() const {
  if (rows < 1 || cols < 1 || rows > Vocabulary::kMaxSide || cols > Vocabulary::kMaxSide) {
    throw Error(ErrorCode::InvalidData, "scene size must be within 1..8 per side");
  }
  std::set<Cell> used;
  for (const auto& o : objects) {
    if (o.cell.row < 0 || o.cell.row >= rows || o.cell.col < 0 || o.cell.col >= cols) {
      throw Error(ErrorCode::InvalidData, "object outside the scene grid");
    }
    if (!used.insert(o.cell).second) throw Error(ErrorCode::InvalidData, "two objects share one cell");
    index_in(Vocabulary::categories(), o.category, "category");
    index_in(Vocabulary::colors(), o.color, "color");
    index_in(Vocabulary::materials(), o.material, "material");
    index_in(Vocabulary::activities(), o.activity, "activity");
  }
}

std::optional<int> World::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

Region World::whole(int index) const {
  const Scene& s = scene(index);
  return Region{index, 0, 0, s.rows, s.cols};
}

std::vector<double> cell_features(const Scene& scene, Cell cell) {
  std::vector<double> f(Vocabulary::kFeatureSize, 0.0);
  const Object* o = scene.at(cell);
  if (!o) return f;
  std::size_t base = 0;
  f[base + index_in(Vocabulary::categories(), o->category, "category")] = 1.0;
  base += Vocabulary::categories().size();
  f[base + index_in(Vocabulary::colors(), o->color, "color")] = 1.0;
  base += Vocabulary::colors().size();
  f[base + index_in(Vocabulary::materials(), o->material, "material")] = 1.0;
  base += Vocabulary::materials().size();
  f[base + index_in(Vocabulary::activities(), o->activity, "activity")] = 1.0;
  base += Vocabulary::activities().size();
  f[base] = 1.0;
  return f;
}

Scene gen_scene(std::uint64_t seed, const SceneConfig& config) {
  Rng rng(seed);
  Scene s;
  s.rows = config.rows;
  s.cols = config.cols;
  const int cells = s.rows * s.cols;
  const int n = static_cast<int>(rng.between(1, std::max(1, cells / 2)));
  std::vector<Cell> all;
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) all.push_back({r, c});
  }
  rng.shuffle(std::span<Cell>(all));
  std::vector<int> per_category(Vocabulary::categories().size(), 0);
  for (int i = 0; i < n; ++i) {
    std::size_t cat = rng.below(per_category.size());
    while (per_category[cat] >= Vocabulary::kMaxPerCategory) cat = rng.below(per_category.size());
    ++per_category[cat];
    Object o;
    o.cell = all[static_cast<std::size_t>(i)];
    o.category = Vocabulary::categories()[cat];
    o.color = rng.pick(Vocabulary::colors());
    o.material = rng.pick(Vocabulary::materials());
    o.activity = rng.pick(Vocabulary::activities());
    s.objects.push_back(std::move(o));
  }
  std::sort(s.objects.begin(), s.objects.end(), [](const Object& a, const Object& b) { return a.cell < b.cell; });
  return s;
}

nlohmann::ordered_json to_json(const Scene& scene) {
  nlohmann::ordered_json objects = nlohmann::ordered_json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"row", o.cell.row},
                       {"col", o.cell.col},
                       {"category", o.category},
                       {"color", o.color},
                       {"material", o.material},
                       {"activity", o.activity}});
  }
  return {{"rows", scene.rows}, {"cols", scene.cols}, {"objects", std::move(objects)}};
}

Scene scene_from_json(const nlohmann::ordered_json& j) {
  try {
    Scene s;
    s.rows = j.at("rows").get<int>();
    s.cols = j.at("cols").get<int>();
    for (const auto& o : j.at("objects")) {
      s.objects.push_back({Cell{o.at("row").get<int>(), o.at("col").get<int>()}, o.at("category").get<std::string>(),
                           o.at("color").get<std::string>(), o.at("material").get<std::string>(),
                           o.at("activity").get<std::string>()});
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("malformed scene: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const World& world) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < world.names.size(); ++i) j[world.names[i]] = to_json(world.scenes[i]);
  return j;
}

World world_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object() || j.empty()) throw Error(ErrorCode::InvalidData, "images must be a non-empty object");
  World w;
  for (const auto& [name, scene] : j.items()) {
    if (name != "IMAGE" && name != "LEFT" && name != "RIGHT") {
      throw Error(ErrorCode::InvalidData, "image name must be IMAGE, LEFT or RIGHT, got '" + name + "'");
    }
    w.names.push_back(name);
    w.scenes.push_back(scene_from_json(scene));
  }
  return w;
}

}  // namespace vpg::synth
