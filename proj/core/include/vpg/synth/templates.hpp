#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vpg/synth/scene.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::synth {

/// One instantiated template, before labelling.
struct Instance {
  World world;
  std::string program_text;
  std::string question;
};

/// A program skeleton with its question phrasing. `make` builds a fresh world
/// and fills the skeleton; for binary templates `want` asks for a positive
/// ("yes"/"True") or negative label and the maker plants or removes objects
/// to get it. The generator still checks the label it actually gets.
struct CaseTemplate {
  std::string id;
  int visual_steps = 0;
  bool binary = false;
  std::function<Instance(Rng&, bool want, const SceneConfig&)> make;
};

const std::vector<CaseTemplate>& case_templates();
/// Throws UnknownTemplate.
const CaseTemplate& case_template(std::string_view id);

/// True for the positive answer of a binary template.
bool is_positive_label(std::string_view label);

}  // namespace vpg::synth
