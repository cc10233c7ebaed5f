// nirc: command-line driver for NIR graphs.
//
// Exit codes: 0 success, 1 domain error (invalid graph, incompatibility,
// numeric failure), 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nir/nir.hpp"

namespace {

using nir::json;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loads a graph and fills derivable shapes; inference problems are left for
// validate() to report.
nir::Graph load(const std::string& path) {
  nir::Graph g = nir::load_graph(path);
  try {
    return nir::infer_shapes(g);
  } catch (const nir::Error&) {
    return g;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double resolve_dt(const nir::Graph& g, const std::optional<double>& flag) {
  if (flag) {
    if (!(*flag > 0.0)) throw UsageError("--dt must be positive");
    return *flag;
  }
  if (auto dt = nir::graph_dt(g)) return *dt;
  return nir::DialectConfig{}.dt;
}

nir::PlatformProfile resolve_profile(const std::string& name_or_path) {
  for (const auto& n : nir::builtin_profile_names())
    if (n == name_or_path) return nir::builtin_profile(n);
  if (!std::filesystem::exists(name_or_path))
    throw UsageError("unknown profile '" + name_or_path + "' (not a built-in name or a file)");
  return nir::load_profile(name_or_path);
}

nir::DialectConfig resolve_dialect(const std::string& name, double dt) {
  if (name.empty() || name == "default") {
    nir::DialectConfig cfg;
    cfg.name = "default";
    cfg.dt = dt;
    return cfg;
  }
  if (!nir::is_named_dialect(name)) throw UsageError("unknown dialect '" + name + "'");
  return nir::named_config(name, dt);
}

json config_json(const nir::DialectConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["dt"] = cfg.dt;
  j["decay"] = nir::integrator_name(cfg.decay);
  j["reset"] = nir::reset_name(cfg.reset);
  j["threshold_order"] = nir::order_name(cfg.threshold_order);
  j["spike_delay_steps"] = cfg.spike_delay_steps;
  if (cfg.fixed) {
    j["numeric"] = {{"kind", "fixed"},
                    {"state_bits", cfg.fixed->state_bits},
                    {"weight_bits", cfg.fixed->weight_bits},
                    {"accumulator_bits", cfg.fixed->accumulator_bits}};
  } else {
    j["numeric"] = {{"kind", "float64"}};
  }
  return j;
}

json violations_json(const std::vector<nir::Violation>& vs) {
  json arr = json::array();
  for (const auto& v : vs)
    arr.push_back({{"constraint", v.constraint}, {"nodes", v.nodes}, {"message", v.message}});
  return arr;
}

std::set<nir::Kind> parse_kinds(const std::string& list) {
  if (list.empty()) return nir::higher_order_kinds();
  std::set<nir::Kind> out;
  for (const auto& name : split_list(list)) {
    auto k = nir::kind_from_name(name);
    if (!k || !nir::higher_order_kinds().count(*k))
      throw UsageError("'" + name + "' is not a higher-order kind (if, lif, cuba_lif)");
    out.insert(*k);
  }
  return out;
}

// Writes to `path`, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    nir::write_text_file(path, text);
}

nir::InputStream resolve_inputs(const nir::Graph& g, const std::string& path, std::optional<std::size_t> steps) {
  if (!path.empty()) {
    auto in = nir::load_inputs(g, path);
    if (steps && *steps != in.steps)
      throw UsageError("--steps " + std::to_string(*steps) + " disagrees with the input file (" +
                       std::to_string(in.steps) + " steps)");
    return in;
  }
  if (!steps) throw UsageError("either --input or --steps is required");
  return nir::zero_inputs(g, *steps);
}

struct Options {
  std::string graph;
  bool json_out = false;
  std::optional<double> dt;
  std::string out;
  std::string dialect;
  std::string dialects;
  std::string input;
  std::optional<std::size_t> steps;
  std::string record;
  std::string profile;
  bool try_rewrites = false;
  int bits = 8;
  std::string kinds;
  bool annotate = false;
  std::string node;
  std::size_t burn_in = 0;
  int window = 5;
  std::string format = "csv";
};

int cmd_validate(const Options& o) {
  const nir::Graph g = load(o.graph);
  const auto diags = nir::validate(g);
  bool has_error = false;
  for (const auto& d : diags) has_error |= d.severity == nir::Severity::error;
  if (o.json_out) {
    json arr = json::array();
    for (const auto& d : diags)
      arr.push_back({{"severity", d.severity == nir::Severity::error ? "error" : "warning"},
                     {"code", d.code},
                     {"subject", d.subject},
                     {"message", d.message}});
    std::cout << nir::canonical_json({{"valid", !has_error}, {"diagnostics", arr}});
  }
  for (const auto& d : diags) std::cerr << d.to_string() << "\n";
  return has_error ? kDomainError : kOk;
}

int cmd_run(const Options& o) {
  const nir::Graph g = load(o.graph);
  const double dt = resolve_dt(g, o.dt);
  const nir::DialectConfig cfg = resolve_dialect(o.dialect, dt);
  const nir::InputStream in = resolve_inputs(g, o.input, o.steps);
  std::set<nir::NodeId> record;
  for (const auto& id : split_list(o.record)) record.insert(id);
  const nir::SimulationTrace trace = nir::run(g, cfg, in, record);
  if (o.json_out || o.format == "json")
    emit(o.out, nir::canonical_json(nir::trace_to_json(trace)));
  else
    emit(o.out, nir::trace_to_csv(trace));
  for (const auto& [id, n] : trace.overflow)
    if (n) std::cerr << "warning: " << id << " saturated " << n << " times\n";
  return kOk;
}

int cmd_check(const Options& o) {
  const nir::Graph g = load(o.graph);
  const auto profile = resolve_profile(o.profile);
  nir::CheckOptions opts;
  opts.try_rewrites = o.try_rewrites;
  if (o.dt) opts.dt = resolve_dt(g, o.dt);
  const auto report = nir::check_constraints(g, profile, opts);
  if (o.json_out) {
    std::cout << nir::canonical_json({{"profile", profile.name},
                                      {"compatible", report.compatible},
                                      {"violations", violations_json(report.violations)},
                                      {"rewrites", report.rewrites}});
  } else {
    std::cout << profile.name << ": " << (report.compatible ? "compatible" : "incompatible") << "\n";
    for (const auto& r : report.rewrites) std::cout << "rewrite: " << r << "\n";
  }
  for (const auto& v : report.violations) {
    std::cerr << "violation[" << v.constraint << "] " << v.message;
    if (!v.nodes.empty()) {
      std::cerr << " (";
      for (std::size_t k = 0; k < v.nodes.size(); ++k) {
        if (k == 8) {
          std::cerr << ", ... " << v.nodes.size() - 8 << " more";
          break;
        }
        std::cerr << (k ? ", " : "") << v.nodes[k];
      }
      std::cerr << ")";
    }
    std::cerr << "\n";
  }
  return report.compatible ? kOk : kDomainError;
}

int cmd_lower(const Options& o) {
  const nir::Graph g = load(o.graph);
  const auto profile = resolve_profile(o.profile);
  const double dt = resolve_dt(g, o.dt);
  const auto result = nir::translate_for_profile(g, profile, dt);
  if (!o.out.empty()) nir::save_graph(o.out, result.graph);
  if (o.json_out) {
    json j{{"profile", profile.name},
           {"config", config_json(result.config)},
           {"rewrites", result.rewrites},
           {"rescalings", result.rescalings}};
    if (o.out.empty()) j["graph"] = nir::graph_to_json(result.graph);
    json notes = json::object();
    for (const auto& [id, t] : result.translations) notes[id] = t.notes;
    j["notes"] = notes;
    std::cout << nir::canonical_json(j);
    return kOk;
  }
  if (o.out.empty()) std::cout << nir::serialize(result.graph);
  std::cerr << "dialect: " << (result.config.name.empty() ? "default" : result.config.name) << "\n";
  for (const auto& r : result.rewrites) std::cerr << "rewrite: " << r << "\n";
  for (const auto& r : result.rescalings) std::cerr << "rescale: " << r << "\n";
  for (const auto& [id, t] : result.translations)
    for (const auto& n : t.notes) std::cerr << "note: " << id << ": " << n << "\n";
  return kOk;
}

int cmd_quantize(const Options& o) {
  if (o.bits < 2 || o.bits > 32) throw UsageError("--bits must lie in [2, 32]");
  const nir::Graph g = load(o.graph);
  const auto q = nir::quantize(g, o.bits);
  if (!o.out.empty()) nir::save_graph(o.out, q.graph);
  if (o.json_out) {
    json tensors = json::array();
    for (const auto& t : q.tensors)
      tensors.push_back({{"node", t.node}, {"param", t.param}, {"scale", t.scale},
                         {"shape", t.shape.dims()}, {"ints", t.ints}});
    json j{{"bits", o.bits}, {"tensors", tensors}};
    if (o.out.empty()) j["graph"] = nir::graph_to_json(q.graph);
    std::cout << nir::canonical_json(j);
  } else if (o.out.empty()) {
    std::cout << nir::serialize(q.graph);
  }
  return kOk;
}

int cmd_rewrite(const Options& o, bool decompose) {
  const nir::Graph g = load(o.graph);
  nir::Graph result;
  if (decompose) {
    result = nir::decompose(g, parse_kinds(o.kinds));
  } else {
    nir::RecomposeOptions ro;
    ro.kinds = parse_kinds(o.kinds);
    ro.annotate_recurrent = o.annotate;
    result = nir::recompose(g, ro);
  }
  if (o.json_out) {
    if (!o.out.empty()) nir::save_graph(o.out, result);
    json j{{"nodes_before", g.nodes().size()}, {"nodes_after", result.nodes().size()}};
    if (o.out.empty()) j["graph"] = nir::graph_to_json(result);
    std::cout << nir::canonical_json(j);
  } else {
    emit(o.out, nir::serialize(result));
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  const nir::Graph g = load(o.graph);
  const double dt = resolve_dt(g, o.dt);
  const auto names = split_list(o.dialects);
  if (names.empty()) throw UsageError("--dialects needs at least one name");
  if (o.window < 0) throw UsageError("--window must be non-negative");
  std::vector<nir::DialectConfig> configs;
  for (const auto& n : names) configs.push_back(resolve_dialect(n, dt));
  const nir::InputStream in = resolve_inputs(g, o.input, o.steps);
  nir::CompareOptions opts;
  opts.burn_in = o.burn_in;
  opts.shift_window = o.window;
  const auto cmp = nir::compare_dialects(g, in, configs, o.node, opts);
  if (!o.out.empty()) nir::emit_report(cmp, o.out);
  if (o.json_out) {
    json pairs = json::array();
    for (const auto& p : cmp.pairs)
      pairs.push_back({{"a", p.a},
                       {"b", p.b},
                       {"count_a", p.result.count_a},
                       {"count_b", p.result.count_b},
                       {"best_shift", p.result.best_shift},
                       {"exact_match_at_shift", p.result.exact_match_at_shift}});
    std::cout << nir::canonical_json({{"node", cmp.node},
                                      {"labels", cmp.matrix.labels},
                                      {"matrix", cmp.matrix.values},
                                      {"pairs", pairs}});
    return kOk;
  }
  std::cout << nir::detail::matrix_csv(cmp.matrix);
  for (const auto& p : cmp.pairs)
    std::cout << p.a << " vs " << p.b << ": counts " << nir::format_double(p.result.count_a) << "/"
              << nir::format_double(p.result.count_b) << ", shift " << p.result.best_shift
              << (p.result.exact_match_at_shift ? " (exact)" : " (inexact)") << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nirc: validate, simulate, transform and compare NIR graphs"};
  app.require_subcommand(1);
  Options o;

  auto graph_arg = [&](CLI::App* sub) {
    sub->add_option("graph", o.graph, "graph file (.nir.json)")->required();
    sub->add_flag("--json", o.json_out, "machine-readable output on stdout");
  };
  auto dt_opt = [&](CLI::App* sub) { sub->add_option("--dt", o.dt, "timestep in seconds (default: metadata dt, else 0.001)"); };

  auto* validate = app.add_subcommand("validate", "check structure and shapes");
  graph_arg(validate);

  auto* run = app.add_subcommand("run", "simulate a graph under a dialect");
  graph_arg(run);
  dt_opt(run);
  run->add_option("--dialect", o.dialect, "named dialect, or 'default'");
  run->add_option("--input", o.input, "input stream (.csv or .json)");
  run->add_option("--steps", o.steps, "number of steps (zero input when --input is absent)");
  run->add_option("--record", o.record, "comma-separated node ids to record ('*' for all)");
  run->add_option("--out", o.out, "trace file (default: stdout)");
  run->add_option("--format", o.format, "trace format")->check(CLI::IsMember({"csv", "json"}));

  auto* lower = app.add_subcommand("lower", "lower a graph onto a platform profile");
  graph_arg(lower);
  dt_opt(lower);
  lower->add_option("--profile", o.profile, "built-in profile name or profile file")->required();
  lower->add_option("--out", o.out, "lowered graph file (default: stdout)");

  auto* check = app.add_subcommand("check", "check a graph against a platform profile");
  graph_arg(check);
  dt_opt(check);
  check->add_option("--profile", o.profile, "built-in profile name or profile file")->required();
  check->add_flag("--try-rewrites", o.try_rewrites, "apply simplifying and lowering rewrites");

  auto* quantize = app.add_subcommand("quantize", "symmetric per-tensor weight quantization");
  graph_arg(quantize);
  quantize->add_option("--bits", o.bits, "weight bits in [2, 32]");
  quantize->add_option("--out", o.out, "quantized graph file (default: stdout)");

  auto* decompose = app.add_subcommand("decompose", "expand higher-order neurons into primitives");
  graph_arg(decompose);
  decompose->add_option("--kinds", o.kinds, "comma-separated kinds (default: if,lif,cuba_lif)");
  decompose->add_option("--out", o.out, "output graph file (default: stdout)");

  auto* recompose = app.add_subcommand("recompose", "collapse primitive patterns into higher-order neurons");
  graph_arg(recompose);
  recompose->add_option("--kinds", o.kinds, "comma-separated kinds (default: if,lif,cuba_lif)");
  recompose->add_flag("--annotate-recurrent", o.annotate, "tag recurrently connected populations");
  recompose->add_option("--out", o.out, "output graph file (default: stdout)");

  auto* compare = app.add_subcommand("compare", "compare one node's activity across dialects");
  graph_arg(compare);
  dt_opt(compare);
  compare->add_option("--dialects", o.dialects, "comma-separated dialect names")->required();
  compare->add_option("--node", o.node, "node to compare")->required();
  compare->add_option("--input", o.input, "input stream (.csv or .json)");
  compare->add_option("--steps", o.steps, "number of steps (zero input when --input is absent)");
  compare->add_option("--burn-in", o.burn_in, "steps excluded from rate averaging");
  compare->add_option("--window", o.window, "spike-train shift search window");
  compare->add_option("--out", o.out, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*run) return cmd_run(o);
    if (*lower) return cmd_lower(o);
    if (*check) return cmd_check(o);
    if (*quantize) return cmd_quantize(o);
    if (*decompose) return cmd_rewrite(o, true);
    if (*recompose) return cmd_rewrite(o, false);
    if (*compare) return cmd_compare(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const nir::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
