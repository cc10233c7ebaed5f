#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nir/graph.hpp"
#include "nir/validate.hpp"

namespace nir {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical JSON text: keys sorted, numbers in shortest round-trip form,
// arrays of scalars kept on one line, everything else one entry per line.
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_scalar_array(const json& j) {
  for (const auto& v : j)
    if (v.is_object() || v.is_array()) return false;
  return true;
}

inline void emit_canonical(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner;
      out += json(it.key()).dump();
      out += ": ";
      emit_canonical(it.value(), out, indent + 2);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
    } else if (is_scalar_array(j)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        out += j[i].dump();
      }
      out += "]";
    } else {
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        emit_canonical(j[i], out, indent + 2);
      }
      out += "\n" + pad + "]";
    }
  } else {
    out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_json(const json& j) {
  std::string out;
  detail::emit_canonical(j, out, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Tensors and shapes
// ---------------------------------------------------------------------------

inline json shape_to_json(const Shape& s) { return json(s.dims()); }

namespace detail {

inline json nest(const Tensor& t, std::size_t axis, std::size_t& cursor) {
  json arr = json::array();
  const std::size_t n = t.shape()[axis];
  for (std::size_t i = 0; i < n; ++i) {
    if (axis + 1 == t.shape().rank()) arr.push_back(t[cursor++]);
    else arr.push_back(nest(t, axis + 1, cursor));
  }
  return arr;
}

[[noreturn]] inline void parse_fail(const std::string& where, const std::string& what) {
  fail(ErrorCode::parse_error, "at " + (where.empty() ? std::string("/") : where) + ": " + what);
}

inline void flatten_into(const json& j, const Shape& shape, std::size_t axis,
                         std::vector<double>& out, const std::string& where) {
  if (!j.is_array() || j.size() != shape[axis])
    parse_fail(where, "expected nested array matching shape " + shape.to_string());
  for (const auto& v : j) {
    if (axis + 1 == shape.rank()) {
      if (!v.is_number()) parse_fail(where, "tensor entries must be numbers");
      out.push_back(v.get<double>());
    } else {
      flatten_into(v, shape, axis + 1, out, where);
    }
  }
}

}  // namespace detail

inline json tensor_to_json(const Tensor& t) {
  json j;
  j["shape"] = shape_to_json(t.shape());
  std::size_t cursor = 0;
  j["data"] = t.shape().rank() == 0 ? json::array() : detail::nest(t, 0, cursor);
  return j;
}

inline Shape shape_from_json(const json& j, const std::string& where) {
  if (j.is_null()) return {};
  if (!j.is_array()) detail::parse_fail(where, "shape must be an array of integers");
  std::vector<std::size_t> dims;
  for (const auto& d : j) {
    if (!d.is_number_unsigned()) detail::parse_fail(where, "shape extents must be non-negative integers");
    dims.push_back(d.get<std::size_t>());
  }
  return Shape(std::move(dims));
}

inline Tensor tensor_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data"))
    detail::parse_fail(where, "tensor needs 'shape' and 'data'");
  Shape shape = shape_from_json(j.at("shape"), where + "/shape");
  if (!shape.well_formed()) detail::parse_fail(where, "tensor shape must be non-empty with extents >= 1");
  std::vector<double> data;
  data.reserve(shape.numel());
  detail::flatten_into(j.at("data"), shape, 0, data, where + "/data");
  return Tensor(std::move(shape), std::move(data));
}

// ---------------------------------------------------------------------------
// Nodes
// ---------------------------------------------------------------------------

inline json params_to_json(const PrimitiveParams& params) {
  json j;
  j["kind"] = std::string(kind_name(kind_of(params)));
  auto opt_shape = [](const Shape& s) { return s.resolved() ? shape_to_json(s) : json(nullptr); };
  std::visit(overloaded{
                 [&](const InputParams& p) { j["shape"] = shape_to_json(p.shape); },
                 [&](const OutputParams& p) { j["shape"] = opt_shape(p.shape); },
                 [&](const AffineParams& p) {
                   j["weight"] = tensor_to_json(p.weight);
                   j["bias"] = tensor_to_json(p.bias);
                 },
                 [&](const LinearParams& p) { j["weight"] = tensor_to_json(p.weight); },
                 [&](const ScaleParams& p) { j["scale"] = tensor_to_json(p.scale); },
                 [&](const ConvParams& p) {
                   j["input_shape"] = opt_shape(p.input_shape);
                   j["weight"] = tensor_to_json(p.weight);
                   j["stride"] = p.stride;
                   j["padding"] = p.padding;
                   j["dilation"] = p.dilation;
                   j["groups"] = p.groups;
                   j["bias"] = tensor_to_json(p.bias);
                 },
                 [&](const DelayParams& p) { j["delay"] = tensor_to_json(p.delay); },
                 [&](const FlattenParams& p) {
                   j["input_shape"] = opt_shape(p.input_shape);
                   j["start_dim"] = p.start_dim;
                   j["end_dim"] = p.end_dim;
                 },
                 [&](const IntegratorParams& p) { j["r"] = tensor_to_json(p.r); },
                 [&](const LeakyIntegratorParams& p) {
                   j["tau"] = tensor_to_json(p.tau);
                   j["r"] = tensor_to_json(p.r);
                   j["v_leak"] = tensor_to_json(p.v_leak);
                 },
                 [&](const SpikeParams& p) { j["threshold"] = tensor_to_json(p.threshold); },
                 [&](const IfParams& p) {
                   j["r"] = tensor_to_json(p.r);
                   j["threshold"] = tensor_to_json(p.threshold);
                 },
                 [&](const LifParams& p) {
                   j["tau"] = tensor_to_json(p.tau);
                   j["r"] = tensor_to_json(p.r);
                   j["v_leak"] = tensor_to_json(p.v_leak);
                   j["threshold"] = tensor_to_json(p.threshold);
                 },
                 [&](const CubaLifParams& p) {
                   j["tau_syn"] = tensor_to_json(p.tau_syn);
                   j["tau_mem"] = tensor_to_json(p.tau_mem);
                   j["r"] = tensor_to_json(p.r);
                   j["v_leak"] = tensor_to_json(p.v_leak);
                   j["w_in"] = tensor_to_json(p.w_in);
                   j["threshold"] = tensor_to_json(p.threshold);
                 },
             },
             params);
  return j;
}

inline PrimitiveParams params_from_json(const json& j, const std::string& where) {
  using detail::parse_fail;
  if (!j.is_object()) parse_fail(where, "node must be an object");
  if (!j.contains("kind") || !j.at("kind").is_string()) parse_fail(where, "node needs a string 'kind'");
  const std::string kind_str = j.at("kind").get<std::string>();
  const auto kind = kind_from_name(kind_str);
  if (!kind) parse_fail(where + "/kind", "unknown primitive kind '" + kind_str + "'");

  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) parse_fail(where, std::string("missing field '") + name + "'");
    return j.at(name);
  };
  auto tensor = [&](const char* name) {
    return tensor_from_json(field(name), where + "/" + name);
  };
  auto shape = [&](const char* name, bool optional) {
    if (optional && !j.contains(name)) return Shape{};
    return shape_from_json(field(name), where + "/" + name);
  };
  auto count = [&](const char* name) {
    const json& v = field(name);
    if (!v.is_number_unsigned()) parse_fail(where + "/" + name, "expected a non-negative integer");
    return v.get<std::size_t>();
  };
  auto counts = [&](const char* name) {
    const json& v = field(name);
    std::vector<std::size_t> out;
    if (!v.is_array()) parse_fail(where + "/" + name, "expected an integer array");
    for (const auto& x : v) {
      if (!x.is_number_unsigned()) parse_fail(where + "/" + name, "expected non-negative integers");
      out.push_back(x.get<std::size_t>());
    }
    return out;
  };

  switch (*kind) {
    case Kind::input: return InputParams{shape("shape", false)};
    case Kind::output: return OutputParams{shape("shape", true)};
    case Kind::affine: return AffineParams{tensor("weight"), tensor("bias")};
    case Kind::linear: return LinearParams{tensor("weight")};
    case Kind::scale: return ScaleParams{tensor("scale")};
    case Kind::conv:
      return ConvParams{shape("input_shape", true), tensor("weight"), counts("stride"),
                        counts("padding"),          counts("dilation"), count("groups"),
                        tensor("bias")};
    case Kind::delay: return DelayParams{tensor("delay")};
    case Kind::flatten:
      return FlattenParams{shape("input_shape", true), count("start_dim"), count("end_dim")};
    case Kind::integrator: return IntegratorParams{tensor("r")};
    case Kind::li: return LeakyIntegratorParams{tensor("tau"), tensor("r"), tensor("v_leak")};
    case Kind::spike: return SpikeParams{tensor("threshold")};
    case Kind::if_: return IfParams{tensor("r"), tensor("threshold")};
    case Kind::lif:
      return LifParams{tensor("tau"), tensor("r"), tensor("v_leak"), tensor("threshold")};
    case Kind::cuba_lif:
      return CubaLifParams{tensor("tau_syn"), tensor("tau_mem"), tensor("r"),
                           tensor("v_leak"),  tensor("w_in"),    tensor("threshold")};
  }
  parse_fail(where, "unhandled kind");
}

// ---------------------------------------------------------------------------
// Graphs
// ---------------------------------------------------------------------------

inline json graph_to_json(const Graph& g) {
  json j;
  j["nir_version"] = g.version();
  j["nodes"] = json::object();
  for (const auto& [id, node] : g.nodes()) j["nodes"][id] = params_to_json(node.params);
  std::vector<Edge> edges = g.edges();
  std::sort(edges.begin(), edges.end());
  j["edges"] = json::array();
  for (const auto& e : edges) {
    j["edges"].push_back({{"source", e.source.node},
                          {"source_port", e.source.port},
                          {"target", e.target.node},
                          {"target_port", e.target.port}});
  }
  j["metadata"] = json(g.metadata());
  return j;
}

inline Graph graph_from_json(const json& j) {
  using detail::parse_fail;
  if (!j.is_object()) parse_fail("", "document must be an object");
  if (!j.contains("nir_version") || !j.at("nir_version").is_string())
    parse_fail("/nir_version", "missing format version");
  const std::string version = j.at("nir_version").get<std::string>();
  if (version != kFormatVersion)
    fail(ErrorCode::version_error, "unsupported nir_version '" + version + "' (expected " +
                                       kFormatVersion + ")");
  if (!j.contains("nodes") || !j.at("nodes").is_object()) parse_fail("/nodes", "missing node map");

  GraphBuilder b;
  for (auto it = j.at("nodes").begin(); it != j.at("nodes").end(); ++it)
    b.add_node(it.key(), params_from_json(it.value(), "/nodes/" + it.key()));

  if (j.contains("edges")) {
    const json& edges = j.at("edges");
    if (!edges.is_array()) parse_fail("/edges", "edges must be an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string where = "/edges/" + std::to_string(i);
      const json& e = edges[i];
      for (const char* key : {"source", "source_port", "target", "target_port"}) {
        if (!e.is_object() || !e.contains(key) || !e.at(key).is_string())
          parse_fail(where, std::string("edge needs string field '") + key + "'");
      }
      b.add_edge(Edge{{e.at("source").get<std::string>(), e.at("source_port").get<std::string>()},
                      {e.at("target").get<std::string>(), e.at("target_port").get<std::string>()}});
    }
  }
  if (j.contains("metadata")) {
    const json& meta = j.at("metadata");
    if (!meta.is_object()) parse_fail("/metadata", "metadata must be an object");
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      if (!it.value().is_string()) parse_fail("/metadata/" + it.key(), "metadata values are strings");
      b.set_metadata(it.key(), it.value().get<std::string>());
    }
  }
  return std::move(b).build();
}

// Parses text, mapping syntax errors to ParseError with line and column.
inline json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::parse_error, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + e.what());
  }
}

// Canonical bytes. Refuses graphs that do not validate.
inline std::string serialize(const Graph& g) {
  const auto diagnostics = validate(g);
  if (!diagnostics.empty()) {
    fail(ErrorCode::invalid_graph, "cannot serialize invalid graph: " + diagnostics.front().to_string());
  }
  return canonical_json(graph_to_json(g));
}

inline Graph deserialize(std::string_view bytes) { return graph_from_json(parse_json_text(bytes)); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::io_error, "write failed for '" + path + "'");
}

inline Graph load_graph(const std::string& path) { return deserialize(read_text_file(path)); }

inline void save_graph(const std::string& path, const Graph& g) { write_text_file(path, serialize(g)); }

}  // namespace nir
