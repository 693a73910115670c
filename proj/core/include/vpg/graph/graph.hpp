#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vpg/dsl/ast.hpp"

namespace vpg::graph {

enum class NodeKind { Input, Latent, Parameter };
std::string_view to_string(NodeKind kind);

struct Producer {
  dsl::ModuleKind module;
  std::size_t statement;
  bool operator==(const Producer&) const = default;
};

struct GraphNode {
  std::size_t id = 0;
  /// Program variable, quoted literal, or parameter family (theta_loc, theta_vqa).
  std::string name;
  NodeKind kind = NodeKind::Input;
  std::optional<Producer> producer;  // latent nodes only
  /// CROP, COUNT, EVAL and RESULT outputs are functions of their parents.
  bool deterministic = false;
  bool operator==(const GraphNode&) const = default;
};

struct ProbGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // parent -> child
  std::size_t result_node = 0;

  std::optional<std::size_t> find(std::string_view name) const;
  std::vector<std::size_t> parents(std::size_t id) const;
  std::vector<std::size_t> children(std::size_t id) const;
};

inline constexpr const char* kThetaLoc = "theta_loc";
inline constexpr const char* kThetaVqa = "theta_vqa";

/// Node ids: parameter families first, then inputs and latents in order of
/// first appearance. Literal inputs are shared by text.
ProbGraph build_graph(const dsl::Program& program);

/// Graphviz text with inputs blue, latents green and parameters red. With
/// `hide_deterministic`, CROP and RESULT nodes are contracted into their
/// neighbours.
std::string export_dot(const ProbGraph& graph, bool hide_deterministic);

nlohmann::ordered_json to_json(const ProbGraph& graph);

/// Parents before children; ties by statement index, roots first. Throws
/// CycleDetected.
std::vector<std::size_t> topological_order(const ProbGraph& graph);

}  // namespace vpg::graph
