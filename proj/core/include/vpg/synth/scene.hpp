#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpg/engine/value.hpp"

namespace vpg::synth {

/// Closed attribute vocabularies of the toy world.
struct Vocabulary {
  static const std::vector<std::string>& categories();
  static const std::vector<std::string>& colors();
  static const std::vector<std::string>& materials();
  static const std::vector<std::string>& activities();

  /// Category, color, material and activity one-hots plus a presence flag.
  static constexpr std::size_t kFeatureSize = 8 + 6 + 3 + 3 + 1;
  static constexpr int kMaxPerCategory = 4;
  static constexpr int kMaxSide = 8;

  static std::optional<std::size_t> category_index(std::string_view name);
};

struct Object {
  Cell cell;
  std::string category;
  std::string color;
  std::string material;
  std::string activity;
  bool operator==(const Object&) const = default;
};

struct Scene {
  int rows = 4;
  int cols = 4;
  std::vector<Object> objects;

  const Object* at(Cell c) const;
  /// Throws InvalidData on out-of-range cells, shared cells or unknown attributes.
  void validate() const;
  bool operator==(const Scene&) const = default;
};

/// The named input images of one case: IMAGE, or LEFT and RIGHT. Detection
/// and Region values refer to images by index into this list.
struct World {
  std::vector<std::string> names;
  std::vector<Scene> scenes;

  std::optional<int> index_of(std::string_view name) const;
  const Scene& scene(int index) const { return scenes.at(static_cast<std::size_t>(index)); }
  Region whole(int index) const;
  bool operator==(const World&) const = default;
};

/// One-hot features of a cell; all zeros for an empty cell.
std::vector<double> cell_features(const Scene& scene, Cell cell);

struct SceneConfig {
  int rows = 4;
  int cols = 4;
};

/// Deterministic in the seed; object count uniform in [1, cells/2].
Scene gen_scene(std::uint64_t seed, const SceneConfig& config = {});

nlohmann::ordered_json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const World& world);
World world_from_json(const nlohmann::ordered_json& j);

}  // namespace vpg::synth
