#include "vpg/graph/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "vpg/util/error.hpp"

namespace vpg::graph {
namespace {

std::string literal_name(const std::string& text) { return "'" + text + "'"; }

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

struct Style {
  const char* cls;
  const char* fill;
};

Style style(NodeKind k) {
  switch (k) {
    case NodeKind::Input: return {"input", "#9ecae1"};
    case NodeKind::Latent: return {"latent", "#a1d99b"};
    case NodeKind::Parameter: return {"parameter", "#fc9272"};
  }
  return {"", ""};
}

bool contracted(const GraphNode& n) {
  return n.producer && (dsl::is_crop(n.producer->module) || n.producer->module == dsl::ModuleKind::Result);
}

}  // namespace

std::string_view to_string(NodeKind kind) { return style(kind).cls; }

std::optional<std::size_t> ProbGraph::find(std::string_view name) const {
  for (const auto& n : nodes) {
    if (n.name == name) return n.id;
  }
  return std::nullopt;
}

std::vector<std::size_t> ProbGraph::parents(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& [p, c] : edges) {
    if (c == id) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> ProbGraph::children(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& [p, c] : edges) {
    if (p == id) out.push_back(c);
  }
  return out;
}

ProbGraph build_graph(const dsl::Program& program) {
  using dsl::ModuleKind;
  ProbGraph g;
  std::map<std::string, std::size_t, std::less<>> ids;
  auto add = [&](std::string name, NodeKind kind, std::optional<Producer> producer, bool deterministic) {
    const std::size_t id = g.nodes.size();
    ids[name] = id;
    g.nodes.push_back({id, std::move(name), kind, producer, deterministic});
    return id;
  };

  const bool uses_loc = std::any_of(program.statements.begin(), program.statements.end(),
                                    [](const dsl::Statement& s) { return s.module == ModuleKind::Loc; });
  const bool uses_vqa = std::any_of(program.statements.begin(), program.statements.end(),
                                    [](const dsl::Statement& s) { return s.module == ModuleKind::Vqa; });
  if (uses_loc) add(kThetaLoc, NodeKind::Parameter, std::nullopt, false);
  if (uses_vqa) add(kThetaVqa, NodeKind::Parameter, std::nullopt, false);

  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& st = program.statements[i];
    std::vector<std::size_t> parents;
    for (const auto& a : st.args) {
      if (a.value.kind == dsl::Arg::Kind::Var) {
        auto it = ids.find(a.value.text);
        if (it == ids.end()) {
          if (!dsl::is_input_image(a.value.text)) {
            throw Error(ErrorCode::InternalError, "graph build: unresolved variable " + a.value.text);
          }
          parents.push_back(add(a.value.text, NodeKind::Input, std::nullopt, false));
        } else {
          parents.push_back(it->second);
        }
      } else if (a.key != "expr") {
        const std::string name = literal_name(a.value.text);
        auto it = ids.find(name);
        parents.push_back(it != ids.end() ? it->second : add(name, NodeKind::Input, std::nullopt, false));
      }
    }
    if (st.eval) {
      for (const auto& v : evalexpr::referenced_vars(*st.eval)) parents.push_back(ids.at(v));
    }
    if (st.module == ModuleKind::Loc) parents.push_back(ids.at(kThetaLoc));
    if (st.module == ModuleKind::Vqa) parents.push_back(ids.at(kThetaVqa));
    const std::size_t id = add(st.target, NodeKind::Latent, Producer{st.module, i}, !dsl::is_visual(st.module));
    for (auto p : parents) g.edges.emplace_back(p, id);
    if (st.module == ModuleKind::Result) g.result_node = id;
  }
  return g;
}

std::string export_dot(const ProbGraph& graph, bool hide_deterministic) {
  std::vector<bool> hidden(graph.nodes.size(), false);
  if (hide_deterministic) {
    for (const auto& n : graph.nodes) hidden[n.id] = contracted(n);
  }
  // Edge set after contraction: a hidden node's parents connect directly to
  // its visible descendants.
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::function<void(std::size_t, std::size_t)> connect = [&](std::size_t from, std::size_t via) {
    for (auto c : graph.children(via)) {
      if (hidden[c]) {
        connect(from, c);
      } else if (seen.insert({from, c}).second) {
        edges.emplace_back(from, c);
      }
    }
  };
  for (const auto& n : graph.nodes) {
    if (!hidden[n.id]) connect(n.id, n.id);
  }

  std::ostringstream out;
  out << "digraph program {\n";
  out << "  rankdir=TB;\n";
  out << "  node [style=filled, fontname=\"Helvetica\"];\n";
  for (const auto& n : graph.nodes) {
    if (hidden[n.id]) continue;
    const Style s = style(n.kind);
    out << "  n" << n.id << " [label=\"" << dot_escape(n.name);
    if (n.producer) out << "\\n" << dsl::to_string(n.producer->module);
    out << "\", class=\"" << s.cls << "\", fillcolor=\"" << s.fill << "\"";
    out << ", shape=" << (n.kind == NodeKind::Parameter ? "diamond" : n.kind == NodeKind::Input ? "box" : "ellipse");
    if (n.deterministic) out << ", peripheries=2";
    out << "];\n";
  }
  for (const auto& [p, c] : edges) out << "  n" << p << " -> n" << c << ";\n";
  out << "}\n";
  return out.str();
}

nlohmann::ordered_json to_json(const ProbGraph& graph) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json j = {{"id", n.id}, {"name", n.name}, {"kind", to_string(n.kind)}};
    if (n.producer) {
      j["module"] = dsl::to_string(n.producer->module);
      j["statement"] = n.producer->statement;
    }
    j["deterministic"] = n.deterministic;
    nodes.push_back(std::move(j));
  }
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& [p, c] : graph.edges) edges.push_back({p, c});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"result", graph.result_node}};
}

std::vector<std::size_t> topological_order(const ProbGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> kids(n);
  for (const auto& [p, c] : graph.edges) {
    if (p >= n || c >= n) throw Error(ErrorCode::InternalError, "edge refers to a missing node");
    ++indegree[c];
    kids[p].push_back(c);
  }
  auto key = [&](std::size_t id) {
    const auto& node = graph.nodes[id];
    return std::pair<std::size_t, std::size_t>(node.producer ? node.producer->statement + 1 : 0, id);
  };
  std::priority_queue<std::pair<std::size_t, std::size_t>, std::vector<std::pair<std::size_t, std::size_t>>,
                      std::greater<>>
      ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(key(i));
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t id = ready.top().second;
    ready.pop();
    order.push_back(id);
    for (auto c : kids[id]) {
      if (--indegree[c] == 0) ready.push(key(c));
    }
  }
  if (order.size() != n) throw Error(ErrorCode::CycleDetected, "graph contains a cycle");
  return order;
}

}  // namespace vpg::graph
