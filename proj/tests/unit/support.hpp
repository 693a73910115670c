#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpg/diff/params.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/synth/generator.hpp"
#include "vpg/synth/scene.hpp"
#include "vpg/toy/module.hpp"
#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::test {

inline std::string fixture_path(const std::string& name) { return std::string(VPG_FIXTURE_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture_text(const std::string& name) { return read_file(fixture_path(name)); }

// A hand-written case: program, world and fixture modules.
struct FixtureCase {
  dsl::Program program;
  synth::World world;
  toy::ModuleSet modules;
};

inline FixtureCase load_fixture_case(const std::string& name) {
  const auto j = nlohmann::ordered_json::parse(fixture_text(name));
  toy::ModuleOptions opts;
  opts.fixture = j.at("fixture");
  return {dsl::parse_program(j.at("program").get<std::string>()), synth::world_from_json(j.at("images")),
          toy::ModuleRegistry::global().create("fixture", opts)};
}

inline const diff::ParamStore& no_params() {
  static const diff::ParamStore empty;
  return empty;
}

// Generated corpus shared by several suites.
inline const std::vector<synth::CaseRecord>& small_corpus() {
  static const std::vector<synth::CaseRecord> cases = [] {
    synth::DatasetConfig c;
    c.cases = 120;
    c.seed = 11;
    return synth::gen_dataset(c);
  }();
  return cases;
}

// Random well-formed program text over the whole module set. Variables are
// only used after they are assigned, and every EVAL refers to earlier answers.
inline std::string random_program(Rng& rng) {
  std::vector<std::string> boxes, images{"IMAGE"}, answers, counts;
  std::string text;
  const auto& cats = synth::Vocabulary::categories();
  static const std::vector<std::string> crops = {"CROP",       "CROP_RIGHTOF", "CROP_LEFTOF", "CROP_INFRONTOF",
                                                 "CROP_BEHIND", "CROP_BELOW",   "CROP_ABOVE"};
  int n = 0;
  auto fresh = [&](const std::string& prefix) { return prefix + std::to_string(n++); };
  const int lines = static_cast<int>(rng.between(1, 8));
  for (int i = 0; i < lines; ++i) {
    const auto kind = rng.below(boxes.empty() ? 3 : 5);
    if (kind == 0) {
      const auto v = fresh("BOX");
      text += v + "=LOC(image=" + rng.pick(images) + ",object='" + rng.pick(cats) + "')\n";
      boxes.push_back(v);
    } else if (kind == 1 || kind == 2) {
      const auto v = fresh("ANSWER");
      text += v + "=VQA(image=" + rng.pick(images) + ",question='Is there a " + rng.pick(cats) + "?')\n";
      answers.push_back(v);
    } else if (kind == 3) {
      const auto v = fresh("IMAGE");
      text += v + "=" + rng.pick(crops) + "(image=" + rng.pick(images) + ",box=" + rng.pick(boxes) + ")\n";
      images.push_back(v);
    } else {
      const auto v = fresh("ANSWER");
      text += v + "=COUNT(box=" + rng.pick(boxes) + ")\n";
      counts.push_back(v);
    }
  }
  std::string result;
  if (!answers.empty() && rng.chance(0.7)) {
    const auto a = rng.pick(answers);
    const auto b = rng.pick(answers);
    const auto v = fresh("ANSWER");
    static const std::vector<std::string> shapes = {
        "{A} and not {B}", "'yes' if {A} == 'yes' or {B} == 'no' else 'no'", "{A} xor {B}", "{A} != {B}"};
    std::string expr = rng.pick(shapes);
    expr.replace(expr.find("{A}"), 3, "{" + a + "}");
    expr.replace(expr.find("{B}"), 3, "{" + b + "}");
    text += v + "=EVAL(expr=\"" + expr + "\")\n";
    result = v;
  } else if (!counts.empty()) {
    const auto v = fresh("ANSWER");
    text += v + "=EVAL(expr=\"{" + rng.pick(counts) + "} >= 2\")\n";
    result = v;
  } else if (!answers.empty()) {
    result = rng.pick(answers);
  } else {
    result = fresh("ANSWER");
    text += result + "=COUNT(box=" + boxes.back() + ")\n";
  }
  text += "FINAL_RESULT=RESULT(var=" + result + ")\n";
  return text;
}

}  // namespace vpg::test
