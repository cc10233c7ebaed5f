#pragma once

// Graph builders and random generators shared by the unit tests and the
// acceptance binary.

#include <random>
#include <string>
#include <vector>

#include "nir/nir.hpp"

namespace nirtest {

using namespace nir;

inline std::string source_path(const std::string& rel) { return std::string(NIR_SOURCE_DIR) + "/" + rel; }

inline Tensor vec(std::vector<double> v) { return Tensor::vector(std::move(v)); }
inline Tensor filled(std::size_t n, double x) { return Tensor::full(Shape{n}, x); }

inline LifParams lif(std::size_t n, double tau, double r, double v_leak, double theta) {
  return {filled(n, tau), filled(n, r), filled(n, v_leak), filled(n, theta)};
}

// in -> id -> out for a rank-1 node of size n.
inline Graph single_node(PrimitiveParams p, std::size_t n, const std::string& id = "lif1") {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{n}});
  b.add_node(id, std::move(p));
  b.add_node("out", OutputParams{Shape{n}});
  b.connect("in", id).connect(id, "out");
  return std::move(b).build();
}

inline InputStream series(const std::string& node, const std::vector<std::vector<double>>& rows) {
  InputStream in;
  in.steps = rows.size();
  for (const auto& r : rows) in.series[node].push_back(vec(r));
  return in;
}

inline InputStream constant_input(const std::string& node, std::size_t steps, std::vector<double> value) {
  return series(node, std::vector<std::vector<double>>(steps, value));
}

inline std::vector<std::size_t> event_times(const std::vector<Tensor>& events, std::size_t k = 0) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < events.size(); ++t)
    if (events[t][k] != 0.0) out.push_back(t);
  return out;
}

inline Graph drift_graph() { return load_graph(source_path("data/drift_lif.nir.json")); }
inline InputStream drift_input(const Graph& g) { return load_inputs(g, source_path("data/drift_input.csv")); }

// Integer CuBa-LIF golden vector produced by tests/oracles/xylo_bitshift.py.
struct XyloGolden {
  Graph graph;
  InputStream input;
  std::vector<double> u, v, spikes;
};

inline XyloGolden xylo_golden() {
  const json j = parse_json_text(read_text_file(source_path("tests/data/xylo_golden.json")));
  auto scalar = [&](const char* k) { return vec({j.at(k).get<double>()}); };
  XyloGolden out;
  out.graph = single_node(CubaLifParams{scalar("tau_syn"), scalar("tau_mem"), scalar("r"), vec({0.0}),
                                        scalar("w_in"), scalar("threshold")},
                          1, "cell");
  std::vector<std::vector<double>> rows;
  for (const auto& x : j.at("input")) rows.push_back({x.get<double>()});
  out.input = series("in", rows);
  out.u = j.at("u").get<std::vector<double>>();
  out.v = j.at("v").get<std::vector<double>>();
  out.spikes = j.at("spikes").get<std::vector<double>>();
  return out;
}

// Number of steps at which the engine disagrees with the golden vector.
inline std::size_t xylo_golden_mismatches(const XyloGolden& gold) {
  const auto trace = run(gold.graph, named_config("xylo", 1.0), gold.input, {"cell"});
  const auto& rec = trace.nodes.at("cell");
  std::size_t bad = 0;
  for (std::size_t t = 0; t < gold.v.size(); ++t)
    if (rec.u[t][0] != gold.u[t] || rec.v[t][0] != gold.v[t] || rec.output[t][0] != gold.spikes[t]) ++bad;
  return bad + (rec.v.size() != gold.v.size());
}

// ---------------------------------------------------------------------------
// Random graphs
// ---------------------------------------------------------------------------

struct RandomGraphOptions {
  std::size_t max_nodes = 12;
  bool higher_order = true;  // if, lif, cuba_lif
  bool primitives = true;    // li, integrator, spike, delay
  bool recurrence = true;    // Linear back-edges into stateful nodes
  bool spatial = false;      // conv and flatten (rank > 1)
  bool metadata = false;
};

class RandomGraphs {
 public:
  explicit RandomGraphs(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t pick(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  Tensor random_tensor(Shape shape, double lo, double hi) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& x : t.values()) x = uniform(lo, hi);
    return t;
  }

  // Rank-1 graph over Table-1 kinds: a random DAG grown from one or two
  // inputs, optionally closed by Linear feedback into stateful nodes.
  Graph graph(const RandomGraphOptions& o = {}) {
    if (o.spatial) return spatial_graph(o);
    GraphBuilder b;
    struct Slot {
      NodeId id;
      std::size_t n;
      bool stateful;
    };
    std::vector<Slot> slots;
    std::size_t count = 0;
    auto name = [&] { return "n" + std::to_string(count++); };
    const std::size_t inputs = pick(1, 2);
    for (std::size_t k = 0; k < inputs; ++k) {
      const NodeId id = name();
      const std::size_t n = pick(1, 4);
      b.add_node(id, InputParams{Shape{n}});
      slots.push_back({id, n, false});
    }
    const std::size_t budget = pick(3, o.max_nodes - 1) - inputs;
    for (std::size_t step = 0; step < budget; ++step) {
      const Slot src = slots[pick(0, slots.size() - 1)];
      const std::size_t n = src.n;
      const NodeId id = name();
      std::vector<int> choices{0, 1, 2};
      if (o.primitives) choices.insert(choices.end(), {3, 4, 5, 6});
      if (o.higher_order) choices.insert(choices.end(), {7, 8, 9, 7, 8, 9});
      const int c = choices[pick(0, choices.size() - 1)];
      std::size_t out_n = n;
      bool stateful = false;
      switch (c) {
        case 0: {
          out_n = pick(1, 4);
          Tensor bias = coin(0.3) ? Tensor::zeros(Shape{out_n}) : random_tensor(Shape{out_n}, -0.5, 0.5);
          b.add_node(id, AffineParams{random_tensor(Shape{out_n, n}, -1.5, 1.5), std::move(bias)});
          break;
        }
        case 1:
          out_n = pick(1, 4);
          b.add_node(id, LinearParams{random_tensor(Shape{out_n, n}, -1.5, 1.5)});
          break;
        case 2: b.add_node(id, ScaleParams{random_tensor(Shape{n}, 0.2, 2.0)}); break;
        case 3: {
          Tensor d = Tensor::zeros(Shape{n});
          for (auto& x : d.values()) x = static_cast<double>(pick(0, 3)) * 1e-3;
          b.add_node(id, DelayParams{std::move(d)});
          break;
        }
        case 4:
          b.add_node(id, LeakyIntegratorParams{random_tensor(Shape{n}, 2e-3, 40e-3),
                                               random_tensor(Shape{n}, 0.5, 5.0),
                                               random_tensor(Shape{n}, -0.2, 0.2)});
          stateful = true;
          break;
        case 5:
          b.add_node(id, IntegratorParams{random_tensor(Shape{n}, 50.0, 500.0)});
          stateful = true;
          break;
        case 6: b.add_node(id, SpikeParams{random_tensor(Shape{n}, 0.1, 1.0)}); break;
        case 7:
          b.add_node(id, IfParams{random_tensor(Shape{n}, 50.0, 500.0), random_tensor(Shape{n}, 0.3, 1.5)});
          stateful = true;
          break;
        case 8:
          b.add_node(id, LifParams{random_tensor(Shape{n}, 2e-3, 40e-3), random_tensor(Shape{n}, 1.0, 8.0),
                                   random_tensor(Shape{n}, -0.2, 0.2), random_tensor(Shape{n}, 0.3, 1.5)});
          stateful = true;
          break;
        default:
          b.add_node(id, CubaLifParams{random_tensor(Shape{n}, 2e-3, 20e-3), random_tensor(Shape{n}, 2e-3, 40e-3),
                                       random_tensor(Shape{n}, 1.0, 8.0), random_tensor(Shape{n}, -0.2, 0.2),
                                       random_tensor(Shape{n}, 0.5, 3.0), random_tensor(Shape{n}, 0.3, 1.5)});
          stateful = true;
          break;
      }
      b.connect(src.id, id);
      // Occasional second same-shaped source (element-wise fan-in).
      if (out_n == n && c >= 2 && coin(0.2)) {
        for (const auto& s : slots)
          if (s.n == n && s.id != src.id) {
            b.connect(s.id, id);
            break;
          }
      }
      slots.push_back({id, out_n, stateful});
    }
    if (o.recurrence && count + 2 <= o.max_nodes && coin(0.5)) {
      std::vector<Slot> targets;
      for (const auto& s : slots)
        if (s.stateful) targets.push_back(s);
      if (!targets.empty()) {
        const Slot dst = targets[pick(0, targets.size() - 1)];
        const Slot src = slots[pick(0, slots.size() - 1)];
        const NodeId id = name();
        b.add_node(id, LinearParams{random_tensor(Shape{dst.n, src.n}, -0.8, 0.8)});
        b.connect(src.id, id).connect(id, dst.id);
      }
    }
    // Outputs for every sink, at least one.
    std::set<NodeId> has_out;
    for (const auto& e : b.peek().edges()) has_out.insert(e.source.node);
    std::vector<Slot> sinks;
    for (const auto& s : slots)
      if (!has_out.count(s.id) && b.peek().node(s.id).kind() != Kind::input) sinks.push_back(s);
    if (sinks.empty()) sinks.push_back(slots.back());
    for (const auto& s : sinks) {
      if (count >= o.max_nodes + 2) break;
      const NodeId id = name();
      b.add_node(id, OutputParams{Shape{s.n}});
      b.connect(s.id, id);
    }
    if (o.metadata && coin()) b.set_metadata("dt", "0.001");
    return std::move(b).build();
  }

  // Conv -> (if) -> flatten -> linear chains with unresolved output shapes.
  Graph spatial_graph(const RandomGraphOptions& o) {
    GraphBuilder b;
    const std::size_t c_in = pick(1, 2), h = pick(3, 6), w = pick(3, 6);
    b.add_node("img", InputParams{Shape{c_in, h, w}});
    const std::size_t c_out = pick(1, 3), k = pick(1, 3);
    const std::size_t pad = pick(0, 1), stride = pick(1, 2);
    ConvParams conv{Shape{c_in, h, w},
                    random_tensor(Shape{c_out, c_in, k, k}, -1.0, 1.0),
                    {stride, stride},
                    {pad, pad},
                    {1, 1},
                    1,
                    random_tensor(Shape{c_out}, -0.1, 0.1)};
    const Shape conv_out = conv_output_shape(conv);
    b.add_node("conv", std::move(conv));
    b.connect("img", "conv");
    NodeId last = "conv";
    if (coin()) {
      b.add_node("spk", IfParams{Tensor::full(conv_out, uniform(100.0, 400.0)), Tensor::full(conv_out, 1.0)});
      b.connect(last, "spk");
      last = "spk";
    }
    b.add_node("flat", FlattenParams{coin() ? conv_out : Shape{}, 0, 2});
    b.connect(last, "flat");
    const std::size_t n = conv_out.numel();
    b.add_node("fc", LinearParams{random_tensor(Shape{pick(1, 3), n}, -1.0, 1.0)});
    b.connect("flat", "fc");
    b.add_node("y", OutputParams{coin() ? Shape{} : Shape{b.peek().node("fc").ports().outputs.front().shape}});
    b.connect("fc", "y");
    if (o.metadata) b.set_metadata("note", "spatial");
    return infer_shapes(std::move(b).build());
  }

  InputStream inputs(const Graph& g, std::size_t steps, double rate = 0.3) {
    InputStream in;
    in.steps = steps;
    for (const auto& id : g.nodes_of_kind(Kind::input)) {
      const Shape s = std::get<InputParams>(g.node(id).params).shape;
      for (std::size_t t = 0; t < steps; ++t) {
        Tensor x = Tensor::zeros(s);
        for (auto& v : x.values()) v = coin(rate) ? 1.0 : 0.0;
        in.series[id].push_back(std::move(x));
      }
    }
    return in;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace nirtest
