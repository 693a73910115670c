#include <cmath>

#include "vpg/toy/toy_modules.hpp"
#include "vpg/util/error.hpp"

namespace vpg::toy {
namespace {

using nlohmann::ordered_json;

bool image_matches(const ordered_json& entry, const synth::World& world, int image) {
  if (!entry.contains("image")) return true;
  const auto idx = world.index_of(entry.at("image").get<std::string>());
  return idx && *idx == image;
}

Categorical from_pairs(std::vector<Value> support, std::vector<double> probs, const std::string& what) {
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::InvalidData, what + ": probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidData, what + ": probabilities sum to " + std::to_string(total));
  }
  std::vector<diff::Scalar> scalars(probs.begin(), probs.end());
  return Categorical(std::move(support), std::move(scalars));
}

}  // namespace

Categorical OracleLoc::locate(const synth::World& world, const Region& image, std::string_view object,
                              diff::ParamBinding&) const {
  return Categorical::point(true_detection(world, image, object));
}

Categorical OracleVqa::answer(const synth::World& world, const Region& region, std::string_view question,
                              diff::ParamBinding&) const {
  return Categorical::point(true_answer(world, region, question));
}

Categorical FixtureLoc::locate(const synth::World& world, const Region& image, std::string_view object,
                               diff::ParamBinding&) const {
  try {
    for (const auto& e : entries_) {
      if (e.at("object").get<std::string>() != object || !image_matches(e, world, image.image)) continue;
      std::vector<Value> support;
      std::vector<double> probs;
      for (const auto& o : e.at("outcomes")) {
        Detection d{image.image, {}};
        for (const auto& b : o.at("boxes")) d.boxes.push_back(Cell{b.at(0).get<int>(), b.at(1).get<int>()});
        support.emplace_back(std::move(d));
        probs.push_back(o.at("p").get<double>());
      }
      return from_pairs(std::move(support), std::move(probs), "fixture LOC '" + std::string(object) + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidData, std::string("malformed LOC fixture: ") + ex.what());
  }
  throw Error(ErrorCode::ModuleFailure, "fixture has no LOC entry for '" + std::string(object) + "'");
}

Categorical FixtureVqa::answer(const synth::World& world, const Region& region, std::string_view question,
                               diff::ParamBinding&) const {
  try {
    const ordered_json* fallback = nullptr;
    const ordered_json* exact = nullptr;
    for (const auto& e : entries_) {
      if (e.at("question").get<std::string>() != question || !image_matches(e, world, region.image)) continue;
      if (e.contains("region")) {
        const auto& r = e.at("region");
        const Region want{region.image, r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>()};
        if (want == region && !exact) exact = &e;
      } else if (!fallback) {
        fallback = &e;
      }
    }
    const ordered_json* use = exact ? exact : fallback;
    if (use) {
      std::vector<Value> support;
      std::vector<double> probs;
      for (const auto& [answer, p] : use->at("dist").items()) {
        support.push_back(Value::from_label(answer));
        probs.push_back(p.get<double>());
      }
      return from_pairs(std::move(support), std::move(probs), "fixture VQA '" + std::string(question) + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidData, std::string("malformed VQA fixture: ") + ex.what());
  }
  throw Error(ErrorCode::ModuleFailure, "fixture has no VQA entry for '" + std::string(question) + "' on region [" +
                                            std::to_string(region.row0) + "," + std::to_string(region.col0) + "," +
                                            std::to_string(region.row1) + "," + std::to_string(region.col1) + ")");
}

}  // namespace vpg::toy
