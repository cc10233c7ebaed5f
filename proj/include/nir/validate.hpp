#pragma once

#include <regex>
#include <set>
#include <string>
#include <vector>

#include "nir/graph.hpp"

namespace nir {

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;     // stable identifier, e.g. "shape-mismatch"
  std::string subject;  // node id or edge rendering
  std::string message;

  std::string to_string() const {
    return std::string(severity == Severity::error ? "error" : "warning") + "[" + code +
           "] " + subject + ": " + message;
  }
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline bool valid_node_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_.-]+");
  return std::regex_match(id, pattern);
}

// Structural check; an empty result means the graph satisfies every type
// invariant and all edges connect equally shaped ports.
inline std::vector<Diagnostic> validate(const Graph& g) {
  std::vector<Diagnostic> out;
  auto report = [&](std::string code, std::string subject, std::string message) {
    out.push_back({Severity::error, std::move(code), std::move(subject), std::move(message)});
  };

  if (g.version() != kFormatVersion)
    report("version", "graph", "unsupported format version '" + g.version() + "'");

  bool has_input = false, has_output = false;
  for (const auto& [id, node] : g.nodes()) {
    if (!valid_node_id(id)) report("node-id", id, "node id must match [A-Za-z0-9_.-]+");
    if (node.id != id) report("node-id", id, "node id does not match its key");
    for (auto& problem : parameter_problems(node.params)) report("params", id, problem);
    for (const auto& port : node.ports().inputs)
      if (!port.shape.resolved())
        report("unresolved-shape", id, "input port '" + port.name + "' has no shape");
    for (const auto& port : node.ports().outputs)
      if (!port.shape.resolved())
        report("unresolved-shape", id, "output port '" + port.name + "' has no shape");
    has_input |= node.kind() == Kind::input;
    has_output |= node.kind() == Kind::output;
  }
  if (!has_input) report("no-input", "graph", "graph has no input node");
  if (!has_output) report("no-output", "graph", "graph has no output node");

  std::set<Edge> seen;
  for (const auto& e : g.edges()) {
    const std::string subject = e.to_string();
    if (!seen.insert(e).second) report("duplicate-edge", subject, "duplicate edge");
    const bool src_known = g.contains(e.source.node);
    const bool dst_known = g.contains(e.target.node);
    if (!src_known) report("unknown-node", subject, "unknown node '" + e.source.node + "'");
    if (!dst_known) report("unknown-node", subject, "unknown node '" + e.target.node + "'");
    if (!src_known || !dst_known) continue;
    const auto src_ports = g.node(e.source.node).ports();
    const auto dst_ports = g.node(e.target.node).ports();
    const Port* out_port = src_ports.find_output(e.source.port);
    const Port* in_port = dst_ports.find_input(e.target.port);
    if (!out_port) report("unknown-port", subject, "no output port '" + e.source.port + "'");
    if (!in_port) report("unknown-port", subject, "no input port '" + e.target.port + "'");
    if (!out_port || !in_port) continue;
    if (out_port->shape.resolved() && in_port->shape.resolved() &&
        out_port->shape != in_port->shape) {
      report("shape-mismatch", subject,
             "shape mismatch on edge: " + out_port->shape.to_string() + " vs " +
                 in_port->shape.to_string());
    }
  }
  return out;
}

inline bool is_valid(const Graph& g) { return validate(g).empty(); }

namespace detail {

// Fills an unresolved input-side shape parameter; returns true on change.
inline bool assign_input_shape(PrimitiveParams& params, const Shape& shape) {
  return std::visit(overloaded{
                        [&](OutputParams& p) {
                          if (p.shape.resolved()) return false;
                          p.shape = shape;
                          return true;
                        },
                        [&](ConvParams& p) {
                          if (p.input_shape.resolved()) return false;
                          p.input_shape = shape;
                          return true;
                        },
                        [&](FlattenParams& p) {
                          if (p.input_shape.resolved()) return false;
                          p.input_shape = shape;
                          return true;
                        },
                        [](auto&) { return false; },
                    },
                    params);
}

}  // namespace detail

// Propagates shapes into nodes whose input extent is derived from upstream
// (output, conv, flatten). Throws ShapeConflict when two edges feeding one
// port disagree. Idempotent.
inline Graph infer_shapes(const Graph& g) {
  for (const auto& e : g.edges()) {
    if (!g.contains(e.source.node)) fail(ErrorCode::unknown_node, e.source.node);
    if (!g.contains(e.target.node)) fail(ErrorCode::unknown_node, e.target.node);
  }
  GraphBuilder b(g);
  bool changed = true;
  while (changed) {
    changed = false;
    const Graph& cur = b.peek();
    for (const auto& [id, node] : cur.nodes()) {
      for (const auto& port : node.ports().inputs) {
        std::optional<Shape> derived;
        for (const auto& e : cur.edges()) {
          if (e.target.node != id || e.target.port != port.name) continue;
          const PortSignature sig = cur.node(e.source.node).ports();
          const Port* src = sig.find_output(e.source.port);
          if (!src || !src->shape.resolved()) continue;
          if (derived && *derived != src->shape) {
            fail(ErrorCode::shape_conflict, "port " + id + "." + port.name + " receives " +
                                                derived->to_string() + " and " +
                                                src->shape.to_string());
          }
          derived = src->shape;
        }
        if (!derived) continue;
        if (port.shape.resolved()) {
          continue;  // fixed by params; validate() reports mismatches
        }
        PrimitiveParams params = node.params;
        if (detail::assign_input_shape(params, *derived)) {
          b.set_params(id, std::move(params));
          changed = true;
          break;
        }
      }
      if (changed) break;
    }
  }
  return std::move(b).build();
}

}  // namespace nir
