#pragma once

#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nir/dialects.hpp"
#include "nir/passes.hpp"
#include "nir/serialize.hpp"

namespace nir {

struct PlatformProfile {
  std::string name;
  std::optional<std::size_t> max_neurons;  // nullopt: unlimited
  std::optional<std::size_t> max_fan_in;
  std::optional<std::size_t> max_fan_out;
  std::set<std::string> supported_kinds;
  int weight_bits = 8;
  int state_bits = 16;
  bool float_state = false;
  std::set<ResetMode> reset_modes;
  std::string dialect;  // named dialect used when lowering
  std::string comment;
  friend bool operator==(const PlatformProfile&, const PlatformProfile&) = default;
};

inline std::vector<std::string> profile_problems(const PlatformProfile& p) {
  std::vector<std::string> out;
  if (p.name.empty()) out.push_back("name must be non-empty");
  if (p.weight_bits < 1 || p.state_bits < 1) out.push_back("bit widths must be >= 1");
  if (p.supported_kinds.empty()) out.push_back("supported_kinds must be non-empty");
  for (const auto& k : p.supported_kinds)
    if (!kind_from_name(k)) out.push_back("unknown kind '" + k + "'");
  if (p.reset_modes.empty()) out.push_back("reset_modes must be non-empty");
  if (!p.dialect.empty() && !is_named_dialect(p.dialect))
    out.push_back("unknown dialect '" + p.dialect + "'");
  return out;
}

inline json profile_to_json(const PlatformProfile& p) {
  json j;
  j["name"] = p.name;
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  j["max_neurons"] = opt(p.max_neurons);
  j["max_fan_in"] = opt(p.max_fan_in);
  j["max_fan_out"] = opt(p.max_fan_out);
  j["supported_kinds"] = json(std::vector<std::string>(p.supported_kinds.begin(), p.supported_kinds.end()));
  j["weight_bits"] = p.weight_bits;
  j["state_bits"] = p.state_bits;
  j["state_numeric"] = p.float_state ? "float" : "fixed";
  json resets = json::array();
  for (auto r : p.reset_modes) resets.push_back(reset_name(r));
  j["reset_modes"] = resets;
  j["dialect"] = p.dialect;
  if (!p.comment.empty()) j["comment"] = p.comment;
  return j;
}

inline PlatformProfile profile_from_json(const json& j) {
  auto bad = [](const std::string& where, const std::string& what) {
    fail(ErrorCode::parse_error, "at /" + where + ": " + what);
  };
  if (!j.is_object()) bad("", "profile must be an object");
  PlatformProfile p;
  auto str = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) bad(key, "missing");
      return {};
    }
    if (!j.at(key).is_string()) bad(key, "expected string");
    return j.at(key).get<std::string>();
  };
  auto limit = [&](const char* key) -> std::optional<std::size_t> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number_unsigned()) bad(key, "expected non-negative integer or null");
    return j.at(key).get<std::size_t>();
  };
  auto bits = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) bad(key, "expected integer");
    return j.at(key).get<int>();
  };
  p.name = str("name", true);
  p.max_neurons = limit("max_neurons");
  p.max_fan_in = limit("max_fan_in");
  p.max_fan_out = limit("max_fan_out");
  if (!j.contains("supported_kinds") || !j.at("supported_kinds").is_array())
    bad("supported_kinds", "expected array");
  for (const auto& k : j.at("supported_kinds")) {
    if (!k.is_string()) bad("supported_kinds", "expected strings");
    p.supported_kinds.insert(k.get<std::string>());
  }
  p.weight_bits = bits("weight_bits");
  p.state_bits = bits("state_bits");
  const std::string numeric = str("state_numeric", false);
  if (!numeric.empty() && numeric != "float" && numeric != "fixed")
    bad("state_numeric", "expected 'float' or 'fixed'");
  p.float_state = numeric == "float";
  if (!j.contains("reset_modes") || !j.at("reset_modes").is_array()) bad("reset_modes", "expected array");
  for (const auto& r : j.at("reset_modes")) {
    const std::string s = r.is_string() ? r.get<std::string>() : "";
    if (s == "hard") p.reset_modes.insert(ResetMode::hard);
    else if (s == "subtractive") p.reset_modes.insert(ResetMode::subtractive);
    else bad("reset_modes", "expected 'hard' or 'subtractive'");
  }
  p.dialect = str("dialect", false);
  p.comment = str("comment", false);
  const auto problems = profile_problems(p);
  if (!problems.empty()) bad("", problems.front());
  return p;
}

inline PlatformProfile load_profile(const std::string& path) {
  return profile_from_json(parse_json_text(read_text_file(path)));
}

// Built-in profiles; profiles/*.json ship the same definitions.
inline PlatformProfile builtin_profile(const std::string& name) {
  PlatformProfile p;
  p.name = name;
  if (name == "xylo") {
    p.max_neurons = 1000;
    p.max_fan_in = 63;
    p.supported_kinds = {"input", "output", "linear", "cuba_lif"};
    p.weight_bits = 8;
    p.state_bits = 16;
    p.reset_modes = {ResetMode::subtractive};
    p.dialect = "xylo";
    p.comment =
        "Xylo Audio 2 accepts at most 63 inputs per neuron; a fan-in of 64 is rejected.";
  } else if (name == "speck") {
    p.supported_kinds = {"input", "output", "conv", "if"};
    p.weight_bits = 8;
    p.state_bits = 16;
    p.reset_modes = {ResetMode::subtractive};
    p.dialect = "rockpool_sinabs";
  } else if (name == "spinnaker2") {
    p.supported_kinds = {"input", "output", "affine", "linear", "conv", "flatten", "if", "lif", "cuba_lif"};
    p.weight_bits = 8;
    p.state_bits = 32;
    p.float_state = true;
    p.reset_modes = {ResetMode::hard, ResetMode::subtractive};
    p.dialect = "spinnaker2_exp_euler";
  } else if (name == "loihi2") {
    p.max_neurons = 1000000;
    p.supported_kinds = {"input", "output", "affine", "linear", "conv", "flatten", "if", "lif", "cuba_lif"};
    p.weight_bits = 8;
    p.state_bits = 24;
    p.reset_modes = {ResetMode::hard};
    p.dialect = "lava_dl";
  } else if (name == "linear_only") {
    p.supported_kinds = {"input", "output", "linear"};
    p.weight_bits = 8;
    p.state_bits = 16;
    p.reset_modes = {ResetMode::hard, ResetMode::subtractive};
  } else {
    fail(ErrorCode::invalid_argument, "unknown profile '" + name + "'");
  }
  return p;
}

inline const std::vector<std::string>& builtin_profile_names() {
  static const std::vector<std::string> names{"linear_only", "loihi2", "speck", "spinnaker2", "xylo"};
  return names;
}

// ---------------------------------------------------------------------------
// Compatibility checking
// ---------------------------------------------------------------------------

struct Violation {
  std::string constraint;  // "unsupported-kind", "neuron-budget", "fan-in", "fan-out", "reset-mode"
  std::vector<NodeId> nodes;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct CompatReport {
  bool compatible = true;
  std::vector<Violation> violations;
  std::vector<std::string> rewrites;  // applied in order
  std::optional<Graph> rewritten;     // present when rewrites were applied
};

inline std::size_t neuron_count(const Graph& g) {
  std::size_t n = 0;
  for (const auto& [id, node] : g.nodes())
    if (is_stateful(node.kind())) n += node.ports().outputs.front().shape.numel();
  return n;
}

inline std::vector<Violation> constraint_violations(const Graph& g, const PlatformProfile& p) {
  std::vector<Violation> out;
  std::map<std::string, std::vector<NodeId>> unsupported;
  for (const auto& [id, node] : g.nodes()) {
    const std::string kind(kind_name(node.kind()));
    if (node.kind() == Kind::input || node.kind() == Kind::output) continue;
    if (!p.supported_kinds.count(kind)) unsupported[kind].push_back(id);
  }
  for (auto& [kind, ids] : unsupported)
    out.push_back({"unsupported-kind", ids, "kind '" + kind + "' is not supported by " + p.name});

  if (p.max_neurons) {
    const std::size_t n = neuron_count(g);
    if (n > *p.max_neurons) {
      std::vector<NodeId> ids;
      for (const auto& [id, node] : g.nodes())
        if (is_stateful(node.kind())) ids.push_back(id);
      out.push_back({"neuron-budget", ids,
                     std::to_string(n) + " neurons exceed the budget of " +
                         std::to_string(*p.max_neurons)});
    }
  }
  for (const auto& [id, node] : g.nodes()) {
    if (node.kind() == Kind::input || node.kind() == Kind::output) continue;
    if (p.max_fan_in) {
      const auto f = fan_in(g, id);
      if (f > *p.max_fan_in)
        out.push_back({"fan-in", {id}, "fan-in " + std::to_string(f) + " exceeds " +
                                           std::to_string(*p.max_fan_in)});
    }
    if (p.max_fan_out) {
      const auto f = fan_out(g, id);
      if (f > *p.max_fan_out)
        out.push_back({"fan-out", {id}, "fan-out " + std::to_string(f) + " exceeds " +
                                            std::to_string(*p.max_fan_out)});
    }
  }
  const std::string reset = g.metadata_value("reset");
  if (!reset.empty()) {
    const bool ok = (reset == "hard" && p.reset_modes.count(ResetMode::hard)) ||
                    (reset == "subtractive" && p.reset_modes.count(ResetMode::subtractive));
    if (!ok) out.push_back({"reset-mode", {}, "reset mode '" + reset + "' is not supported by " + p.name});
  }
  return out;
}

// LIF -> CuBa-LIF with a one-step synapse (τ_syn = dt, w_in = 1). Exact under
// forward Euler, approximate otherwise.
inline Graph lif_to_cuba(const Graph& g, double dt) {
  GraphBuilder b(g);
  for (const auto& id : g.nodes_of_kind(Kind::lif)) {
    const auto& p = std::get<LifParams>(g.node(id).params);
    b.set_params(id, CubaLifParams{Tensor::full(p.tau.shape(), dt), p.tau, p.r, p.v_leak,
                                   Tensor::full(p.tau.shape(), 1.0), p.threshold});
  }
  return std::move(b).build();
}

inline std::optional<double> graph_dt(const Graph& g) {
  const std::string s = g.metadata_value("dt");
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !(v > 0.0))
    fail(ErrorCode::invalid_argument, "metadata dt '" + s + "' is not a positive number");
  return v;
}

struct CheckOptions {
  bool try_rewrites = false;
  std::optional<double> dt;  // enables the LIF -> CuBa-LIF lowering; defaults to metadata "dt"
};

// Without rewrites: every violation. With rewrites: greedily applies
// simplify_affine, decomposition, recomposition and the one-step-synapse
// lowering while each one helps, then reports the final state.
inline CompatReport check_constraints(const Graph& g, const PlatformProfile& p,
                                      const CheckOptions& opts = {}) {
  CompatReport report;
  report.violations = constraint_violations(g, p);
  report.compatible = report.violations.empty();
  if (report.compatible || !opts.try_rewrites) return report;

  auto supports = [&](Kind k) { return p.supported_kinds.count(std::string(kind_name(k))) > 0; };
  const std::optional<double> dt = opts.dt ? opts.dt : graph_dt(g);

  struct Rewrite {
    std::string name;
    std::function<std::optional<Graph>(const Graph&)> apply;
  };
  std::vector<Rewrite> rules;
  rules.push_back({"simplify_affine", [&](const Graph& x) -> std::optional<Graph> {
                     if (supports(Kind::affine) || !supports(Kind::linear)) return std::nullopt;
                     return simplify_affine(x);
                   }});
  rules.push_back({"recompose", [&](const Graph& x) -> std::optional<Graph> {
                     RecomposeOptions ro;
                     ro.kinds.clear();
                     for (Kind k : higher_order_kinds())
                       if (supports(k)) ro.kinds.insert(k);
                     if (ro.kinds.empty()) return std::nullopt;
                     return recompose(x, ro);
                   }});
  rules.push_back({"lif_to_cuba_lif", [&](const Graph& x) -> std::optional<Graph> {
                     if (supports(Kind::lif) || !supports(Kind::cuba_lif) || !dt) return std::nullopt;
                     return lif_to_cuba(x, *dt);
                   }});
  rules.push_back({"decompose", [&](const Graph& x) -> std::optional<Graph> {
                     std::set<Kind> kinds;
                     for (Kind k : higher_order_kinds())
                       if (!supports(k)) kinds.insert(k);
                     if (kinds.empty()) return std::nullopt;
                     return decompose(x, kinds);
                   }});

  Graph current = g;
  std::size_t best = report.violations.size();
  for (const auto& rule : rules) {
    auto next = rule.apply(current);
    if (!next || *next == current) continue;
    const auto v = constraint_violations(*next, p);
    if (v.size() > best) continue;  // only keep rewrites that do not make things worse
    if (v.size() == best && v == constraint_violations(current, p)) continue;
    current = std::move(*next);
    best = v.size();
    report.rewrites.push_back(rule.name);
    if (v.empty()) break;
  }
  report.violations = constraint_violations(current, p);
  report.compatible = report.violations.empty();
  if (!report.rewrites.empty()) report.rewritten = current;
  return report;
}

}  // namespace nir
