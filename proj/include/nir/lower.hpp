#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nir/constraints.hpp"
#include "nir/quantize.hpp"

namespace nir {

struct LoweringResult {
  Graph graph;
  DialectConfig config;
  std::vector<std::string> rewrites;    // graph rewrites applied
  std::vector<std::string> rescalings;  // parameter changes, one line each
  std::map<NodeId, NamedTranslation> translations;
};

namespace detail {

// Quantizes the Linear nodes feeding each group of CuBa-LIF nodes with one
// shared scale and divides threshold and v_leak of the group by that scale,
// so the neurons see integer-weighted input with unchanged dynamics.
inline Graph fold_joint_quantization(const Graph& g, int weight_bits,
                                     std::vector<std::string>& notes) {
  // Union-find over linears and the cuba nodes they feed.
  std::map<NodeId, NodeId> parent;
  std::function<NodeId(const NodeId&)> find = [&](const NodeId& x) -> NodeId {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    return it->second = find(it->second);
  };
  auto unite = [&](const NodeId& a, const NodeId& b) {
    parent.try_emplace(a, a);
    parent.try_emplace(b, b);
    parent[find(a)] = find(b);
  };
  for (const auto& id : g.nodes_of_kind(Kind::cuba_lif)) {
    parent.try_emplace(id, id);
    for (const auto& e : g.incoming(id))
      if (g.node(e.source.node).kind() == Kind::linear) unite(e.source.node, id);
  }
  std::map<NodeId, std::vector<NodeId>> groups;
  for (const auto& [id, p] : parent) groups[find(id)].push_back(id);

  GraphBuilder b(g);
  for (const auto& [root, members] : groups) {
    std::vector<NodeId> linears, neurons;
    for (const auto& id : members)
      (g.node(id).kind() == Kind::linear ? linears : neurons).push_back(id);
    if (linears.empty()) continue;
    bool closed = true;
    for (const auto& n : neurons)
      for (const auto& e : g.incoming(n))
        if (e.target.port == kInputPort && g.node(e.source.node).kind() != Kind::linear) closed = false;
    for (const auto& l : linears)
      for (const auto& e : g.outgoing(l))
        if (g.node(e.target.node).kind() != Kind::cuba_lif) closed = false;
    if (!closed) {
      notes.push_back("group " + root + ": mixed inputs, weights left in float");
      continue;
    }
    double maxabs = 0.0;
    for (const auto& l : linears)
      for (double w : std::get<LinearParams>(g.node(l).params).weight.values())
        maxabs = std::max(maxabs, std::abs(w));
    if (maxabs == 0.0) continue;
    const double qmax = static_cast<double>(quant_max(weight_bits));
    const double scale = maxabs / qmax;
    for (const auto& l : linears) {
      Tensor w = std::get<LinearParams>(g.node(l).params).weight;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::nearbyint(w[k] * qmax / maxabs);
      b.set_params(l, LinearParams{std::move(w)});
      b.set_metadata("quant." + l + ".weight.scale", format_double(scale));
    }
    for (const auto& n : neurons) {
      auto p = std::get<CubaLifParams>(g.node(n).params);
      for (std::size_t k = 0; k < p.threshold.size(); ++k) {
        p.threshold[k] /= scale;
        p.v_leak[k] /= scale;
      }
      b.set_params(n, std::move(p));
      notes.push_back(n + ": threshold and v_leak divided by weight scale " + format_double(scale));
    }
  }
  return std::move(b).build();
}

inline std::string describe(const NodeId& id, const NamedTranslation& t) {
  std::string line = id + ":";
  for (const auto& [name, value] : t.backend_params) {
    line += " " + name + "=[";
    for (std::size_t k = 0; k < value.size(); ++k) line += (k ? "," : "") + format_double(value[k]);
    line += "]";
  }
  return line;
}

}  // namespace detail

// Lowers a graph onto a platform: applies the rewrites found by
// check_constraints, picks the profile's named dialect, translates every
// neuron (surfacing unsatisfiable constraints) and, for fixed-point targets,
// folds a joint weight quantization into the neuron parameters.
inline LoweringResult translate_for_profile(const Graph& g, const PlatformProfile& profile, double dt) {
  CheckOptions opts;
  opts.try_rewrites = true;
  opts.dt = dt;
  const CompatReport report = check_constraints(g, profile, opts);
  if (!report.compatible) {
    std::string msg = "graph is incompatible with " + profile.name;
    for (const auto& v : report.violations) msg += "; " + v.constraint + ": " + v.message;
    fail(ErrorCode::incompatible, msg);
  }
  LoweringResult out;
  out.graph = report.rewritten ? *report.rewritten : g;
  out.rewrites = report.rewrites;
  if (profile.dialect.empty()) {
    out.config.dt = dt;
    out.config.name = profile.name;
  } else {
    out.config = named_config(profile.dialect, dt);
  }
  if (out.config.fixed) {
    out.config.fixed->state_bits = profile.state_bits;
    out.config.fixed->weight_bits = profile.weight_bits;
    out.graph = detail::fold_joint_quantization(out.graph, profile.weight_bits, out.rescalings);
  }
  if (!profile.dialect.empty()) {
    for (const auto& [id, node] : out.graph.nodes()) {
      if (node.kind() != Kind::lif && node.kind() != Kind::cuba_lif) continue;
      NamedTranslation t = translate_named(node.params, profile.dialect, dt);
      out.rescalings.push_back(detail::describe(id, t));
      out.translations.emplace(id, std::move(t));
    }
  }
  return out;
}

}  // namespace nir
