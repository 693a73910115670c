#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vpg/dsl/ast.hpp"
#include "vpg/engine/value.hpp"
#include "vpg/synth/scene.hpp"

namespace vpg::engine {

/// Variables forced to a fixed value (a point mass replaces their module or
/// deterministic output).
using Interventions = std::map<std::string, Value, std::less<>>;

/// Region of an input image; ModuleFailure if the case does not have it.
Region input_region(const synth::World& world, std::string_view name);

/// LOC variables whose detections fix the region bound to `image_var`: the
/// box of every CROP on the way back to an input image. Stops at intervened
/// CROP variables. Statement order.
std::vector<std::string> region_inputs(const dsl::Program& program, std::string_view image_var,
                                       const Interventions& interventions);

/// Variables a statement's output is computed from directly, excluding
/// literal and input-image arguments: region_inputs of the image for
/// LOC/VQA, the box for COUNT, placeholders for EVAL, the var for RESULT.
std::vector<std::string> direct_inputs(const dsl::Program& program, std::size_t statement,
                                       const Interventions& interventions);

/// Every LOC variable the given variables depend on through regions, closed
/// under the LOCs' own region inputs, in statement order.
std::vector<std::string> loc_closure(const dsl::Program& program, const std::vector<std::string>& vars,
                                     const Interventions& interventions);

/// Region bound to `image_var` given the detections of its region inputs.
Region resolve_region(const dsl::Program& program, const synth::World& world, std::string_view image_var,
                      const std::function<const Value&(std::string_view)>& value_of,
                      const Interventions& interventions);

}  // namespace vpg::engine
