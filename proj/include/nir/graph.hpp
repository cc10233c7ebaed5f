#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "nir/error.hpp"
#include "nir/primitives.hpp"

namespace nir {

using NodeId = std::string;

inline constexpr const char* kFormatVersion = "1.0";

// Ports are derived from params on demand, so they can never disagree.
struct Node {
  NodeId id;
  PrimitiveParams params;

  Kind kind() const { return kind_of(params); }
  PortSignature ports() const { return port_signature(params); }

  friend bool operator==(const Node&, const Node&) = default;
};

struct Endpoint {
  NodeId node;
  std::string port;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct Edge {
  Endpoint source;  // output port
  Endpoint target;  // input port

  std::string to_string() const {
    return source.node + "." + source.port + " -> " + target.node + "." + target.port;
  }
  friend auto operator<=>(const Edge&, const Edge&) = default;
  friend bool operator==(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId source, NodeId target, std::string target_port = "input",
                      std::string source_port = "output") {
  return Edge{{std::move(source), std::move(source_port)},
              {std::move(target), std::move(target_port)}};
}

// Immutable graph: nodes keyed (and iterated) by lexicographic id, edges kept
// in sorted order. Build or edit through GraphBuilder.
class Graph {
 public:
  Graph() = default;

  const std::map<NodeId, Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }
  const std::string& version() const noexcept { return version_; }

  bool contains(const NodeId& id) const { return nodes_.count(id) != 0; }

  const Node& node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail(ErrorCode::unknown_node, "no node '" + id + "'");
    return it->second;
  }

  std::vector<Edge> incoming(const NodeId& id) const {
    std::vector<Edge> out;
    for (const auto& e : edges_)
      if (e.target.node == id) out.push_back(e);
    return out;
  }

  std::vector<Edge> outgoing(const NodeId& id) const {
    std::vector<Edge> out;
    for (const auto& e : edges_)
      if (e.source.node == id) out.push_back(e);
    return out;
  }

  std::vector<NodeId> nodes_of_kind(Kind kind) const {
    std::vector<NodeId> out;
    for (const auto& [id, n] : nodes_)
      if (n.kind() == kind) out.push_back(id);
    return out;
  }

  std::string metadata_value(const std::string& key, const std::string& fallback = {}) const {
    auto it = metadata_.find(key);
    return it == metadata_.end() ? fallback : it->second;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend class GraphBuilder;
  std::string version_ = kFormatVersion;
  std::map<NodeId, Node> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::string> metadata_;
};

class GraphBuilder {
 public:
  GraphBuilder() = default;
  explicit GraphBuilder(Graph base) : graph_(std::move(base)) {}

  GraphBuilder& add_node(NodeId id, PrimitiveParams params) {
    if (graph_.nodes_.count(id)) fail(ErrorCode::invalid_graph, "duplicate node id '" + id + "'");
    Node node{id, std::move(params)};
    graph_.nodes_.emplace(std::move(id), std::move(node));
    return *this;
  }

  GraphBuilder& set_params(const NodeId& id, PrimitiveParams params) {
    auto it = graph_.nodes_.find(id);
    if (it == graph_.nodes_.end()) fail(ErrorCode::unknown_node, "no node '" + id + "'");
    it->second.params = std::move(params);
    return *this;
  }

  // Removes the node and every incident edge.
  GraphBuilder& remove_node(const NodeId& id) {
    if (!graph_.nodes_.erase(id)) fail(ErrorCode::unknown_node, "no node '" + id + "'");
    std::erase_if(graph_.edges_,
                  [&](const Edge& e) { return e.source.node == id || e.target.node == id; });
    return *this;
  }

  // Endpoints are not checked here; validate() reports dangling references.
  GraphBuilder& add_edge(Edge edge) {
    graph_.edges_.push_back(std::move(edge));
    return *this;
  }

  GraphBuilder& connect(const NodeId& source, const NodeId& target,
                        const std::string& target_port = "input") {
    return add_edge(make_edge(source, target, target_port));
  }

  GraphBuilder& remove_edge(const Edge& edge) {
    auto it = std::find(graph_.edges_.begin(), graph_.edges_.end(), edge);
    if (it != graph_.edges_.end()) graph_.edges_.erase(it);
    return *this;
  }

  GraphBuilder& set_metadata(std::string key, std::string value) {
    graph_.metadata_[std::move(key)] = std::move(value);
    return *this;
  }

  GraphBuilder& erase_metadata(const std::string& key) {
    graph_.metadata_.erase(key);
    return *this;
  }

  GraphBuilder& set_version(std::string version) {
    graph_.version_ = std::move(version);
    return *this;
  }

  const Graph& peek() const noexcept { return graph_; }
  bool contains(const NodeId& id) const { return graph_.contains(id); }

  Graph build() const& {
    Graph g = graph_;
    std::stable_sort(g.edges_.begin(), g.edges_.end());
    return g;
  }
  Graph build() && {
    std::stable_sort(graph_.edges_.begin(), graph_.edges_.end());
    return std::move(graph_);
  }

 private:
  Graph graph_;
};

// Number of distinct incoming edges over all input ports of the node.
inline std::size_t fan_in(const Graph& g, const NodeId& id) {
  g.node(id);
  std::set<Edge> distinct;
  for (const auto& e : g.edges())
    if (e.target.node == id) distinct.insert(e);
  return distinct.size();
}

inline std::size_t fan_out(const Graph& g, const NodeId& id) {
  g.node(id);
  std::set<Edge> distinct;
  for (const auto& e : g.edges())
    if (e.source.node == id) distinct.insert(e);
  return distinct.size();
}

// Returns an id not yet used in the builder, starting from `wanted`.
inline NodeId unique_id(const GraphBuilder& b, const NodeId& wanted) {
  if (!b.contains(wanted)) return wanted;
  for (int n = 1;; ++n) {
    NodeId candidate = wanted + "_" + std::to_string(n);
    if (!b.contains(candidate)) return candidate;
  }
}

}  // namespace nir
