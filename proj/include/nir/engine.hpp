#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "nir/dialects.hpp"
#include "nir/graph.hpp"
#include "nir/validate.hpp"

namespace nir {

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

struct Schedule {
  std::vector<NodeId> order;  // evaluation order within one timestep
  std::set<Edge> back_edges;  // deliver the previous step's value
  std::set<Edge> reset_edges; // applied after all nodes have been evaluated
};

inline bool is_reset_edge(const Edge& e) { return e.target.port == kResetPort; }

// Back-edges come from a depth-first search rooted at Input nodes, then at
// every remaining node, all in lexicographic order. Edges into "reset" ports
// are excluded: they are delivered at the end of the same step. A cycle made
// only of stateless nodes cannot be discretized and is rejected.
inline Schedule build_schedule(const Graph& g) {
  Schedule s;
  std::map<NodeId, std::vector<const Edge*>> children;
  for (const auto& e : g.edges()) {
    if (!g.contains(e.source.node) || !g.contains(e.target.node))
      fail(ErrorCode::unknown_node, "edge " + e.to_string() + " references a missing node");
    if (is_reset_edge(e)) {
      s.reset_edges.insert(e);
      continue;
    }
    children[e.source.node].push_back(&e);
  }

  // Stateless cycle check on the subgraph without cycle-breaking nodes.
  {
    std::map<NodeId, int> color;
    std::function<void(const NodeId&)> visit = [&](const NodeId& id) {
      color[id] = 1;
      for (const Edge* e : children[id]) {
        const NodeId& next = e->target.node;
        if (breaks_cycles(g.node(next).kind())) continue;
        if (color[next] == 1)
          fail(ErrorCode::cycle_without_state,
               "cycle through stateless nodes at edge " + e->to_string());
        if (color[next] == 0) visit(next);
      }
      color[id] = 2;
    };
    for (const auto& [id, node] : g.nodes())
      if (!breaks_cycles(node.kind()) && color[id] == 0) visit(id);
  }

  std::map<NodeId, int> color;
  std::function<void(const NodeId&)> dfs = [&](const NodeId& id) {
    color[id] = 1;
    for (const Edge* e : children[id]) {
      const int c = color[e->target.node];
      if (c == 1) s.back_edges.insert(*e);
      else if (c == 0) dfs(e->target.node);
    }
    color[id] = 2;
  };
  for (const auto& id : g.nodes_of_kind(Kind::input))
    if (color[id] == 0) dfs(id);
  for (const auto& [id, node] : g.nodes())
    if (color[id] == 0) dfs(id);

  // Kahn's algorithm with a lexicographic min-heap.
  std::map<NodeId, std::size_t> indegree;
  for (const auto& [id, node] : g.nodes()) indegree[id] = 0;
  for (const auto& e : g.edges())
    if (!is_reset_edge(e) && !s.back_edges.count(e)) ++indegree[e.target.node];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.push(id);
  while (!ready.empty()) {
    NodeId id = ready.top();
    ready.pop();
    s.order.push_back(id);
    for (const Edge* e : children[id]) {
      if (s.back_edges.count(*e)) continue;
      if (--indegree[e->target.node] == 0) ready.push(e->target.node);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Streams and traces
// ---------------------------------------------------------------------------

// One tensor per timestep for each Input node.
struct InputStream {
  std::size_t steps = 0;
  std::map<NodeId, std::vector<Tensor>> series;
};

struct NodeRecord {
  std::vector<Tensor> output;  // value on the output port (events for spiking kinds)
  std::vector<Tensor> v;       // membrane or integrator state, post-reset
  std::vector<Tensor> u;       // synaptic current (cuba_lif)
  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct SimulationTrace {
  std::string dialect;
  double dt = 0.0;
  std::size_t steps = 0;
  std::map<NodeId, NodeRecord> nodes;
  std::map<NodeId, std::uint64_t> overflow;  // fixed mode saturation events
  friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

// Output nodes are always recorded; "*" in the selection records every node.
inline std::set<NodeId> recorded_nodes(const Graph& g, const std::set<NodeId>& selection) {
  std::set<NodeId> out;
  for (const auto& id : selection) {
    if (id == "*") {
      for (const auto& [nid, node] : g.nodes()) out.insert(nid);
      continue;
    }
    g.node(id);
    out.insert(id);
  }
  for (const auto& id : g.nodes_of_kind(Kind::output)) out.insert(id);
  return out;
}

namespace detail {

struct DelayLine {
  std::vector<std::size_t> steps;  // per element
  std::deque<Tensor> history;      // most recent input last
};

struct Incoming {
  std::size_t source;
  bool back;
};

}  // namespace detail

// Discrete-time execution. Every input port receives the element-wise sum of
// its incoming edges (zeros when unconnected), accumulated in edge order.
inline SimulationTrace run(const Graph& g, const DialectConfig& cfg, const InputStream& inputs,
                           const std::set<NodeId>& record = {}) {
  check_config(cfg);
  const auto diagnostics = validate(g);
  if (!diagnostics.empty())
    fail(ErrorCode::invalid_graph, "cannot run invalid graph: " + diagnostics.front().to_string());
  const Schedule sched = build_schedule(g);
  const std::size_t n = sched.order.size();
  std::map<NodeId, std::size_t> index;
  for (std::size_t k = 0; k < n; ++k) index[sched.order[k]] = k;

  std::vector<const Node*> nodes(n);
  std::vector<Shape> in_shape(n), out_shape(n);
  std::vector<std::vector<detail::Incoming>> feeds(n), resets(n);
  for (std::size_t k = 0; k < n; ++k) {
    nodes[k] = &g.node(sched.order[k]);
    const auto ports = nodes[k]->ports();
    if (!ports.inputs.empty()) in_shape[k] = ports.inputs.front().shape;
    if (!ports.outputs.empty()) out_shape[k] = ports.outputs.front().shape;
  }
  for (const auto& e : g.edges()) {
    const std::size_t src = index.at(e.source.node);
    const std::size_t dst = index.at(e.target.node);
    if (is_reset_edge(e)) resets[dst].push_back({src, false});
    else feeds[dst].push_back({src, sched.back_edges.count(e) > 0});
  }

  for (const auto& id : g.nodes_of_kind(Kind::input)) {
    auto it = inputs.series.find(id);
    if (it == inputs.series.end())
      fail(ErrorCode::invalid_argument, "no input series for node '" + id + "'");
    if (it->second.size() != inputs.steps)
      fail(ErrorCode::length_mismatch, "input series for '" + id + "' has " +
                                           std::to_string(it->second.size()) + " steps, expected " +
                                           std::to_string(inputs.steps));
    for (const auto& x : it->second)
      if (x.shape() != g.node(id).ports().outputs.front().shape)
        fail(ErrorCode::shape_mismatch, "input series for '" + id + "' has shape " +
                                            x.shape().to_string());
  }

  std::vector<CellState> cells(n);
  std::vector<detail::DelayLine> delays(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Kind kind = nodes[k]->kind();
    if (is_stateful(kind)) cells[k] = initial_cell_state(nodes[k]->params, cfg);
    if (kind == Kind::delay) {
      const auto& p = std::get<DelayParams>(nodes[k]->params);
      for (double d : p.delay.values())
        delays[k].steps.push_back(static_cast<std::size_t>(std::llround(d / cfg.dt)));
    }
  }

  SimulationTrace trace;
  trace.dialect = cfg.name;
  trace.dt = cfg.dt;
  trace.steps = inputs.steps;
  const auto selected = recorded_nodes(g, record);
  for (const auto& id : selected) trace.nodes[id];

  std::vector<Tensor> prev(n), cur(n);
  for (std::size_t k = 0; k < n; ++k)
    if (out_shape[k].resolved()) prev[k] = Tensor::zeros(out_shape[k]);

  auto gather = [&](std::size_t k, const std::vector<detail::Incoming>& list, const Shape& shape) {
    Tensor acc = Tensor::zeros(shape);
    for (const auto& in : list) {
      const Tensor& x = in.back ? prev[in.source] : cur[in.source];
      for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += x[e];
    }
    (void)k;
    return acc;
  };

  for (std::size_t t = 0; t < inputs.steps; ++t) {
    for (std::size_t k = 0; k < n; ++k) {
      const Node& node = *nodes[k];
      const Kind kind = node.kind();
      if (kind == Kind::input) {
        cur[k] = inputs.series.at(node.id)[t];
        continue;
      }
      Tensor x = gather(k, feeds[k], in_shape[k]);
      if (is_stateful(kind)) {
        auto step = step_cell(node.params, cfg, std::move(cells[k]), x);
        cells[k] = std::move(step.state);
        cur[k] = std::move(step.output);
      } else if (kind == Kind::delay) {
        auto& line = delays[k];
        line.history.push_back(std::move(x));
        std::size_t longest = 0;
        for (auto s : line.steps) longest = std::max(longest, s);
        while (line.history.size() > longest + 1) line.history.pop_front();
        Tensor out = Tensor::zeros(out_shape[k]);
        const std::size_t have = line.history.size();
        for (std::size_t e = 0; e < out.size(); ++e) {
          const std::size_t lag = line.steps[e];
          if (lag < have) out[e] = line.history[have - 1 - lag][e];
        }
        cur[k] = std::move(out);
      } else if (kind == Kind::output) {
        cur[k] = std::move(x);
      } else {
        cur[k] = stateless_apply(node.params, x);
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (resets[k].empty()) continue;
      const Tensor r = gather(k, resets[k], cells[k].v.shape());
      cells[k] = apply_reset_input(cfg, std::move(cells[k]), r);
    }
    for (auto& [id, rec] : trace.nodes) {
      const std::size_t k = index.at(id);
      rec.output.push_back(cur[k]);
      if (is_stateful(nodes[k]->kind())) {
        rec.v.push_back(cells[k].v);
        if (nodes[k]->kind() == Kind::cuba_lif) rec.u.push_back(cells[k].u);
      }
    }
    std::swap(prev, cur);
  }
  for (std::size_t k = 0; k < n; ++k)
    if (cells[k].overflow) trace.overflow[sched.order[k]] = cells[k].overflow;
  return trace;
}

// ---------------------------------------------------------------------------
// Reference ODE integration
// ---------------------------------------------------------------------------

struct DenseSeries {
  double dt_fine = 0.0;
  std::vector<Tensor> v;  // one entry per fine step, after that step
  std::vector<Tensor> u;
  std::vector<Tensor> events;  // threshold crossings per fine step
};

// Explicit Euler on the declared ODE of the graph's single stateful node at
// resolution dt_fine (at most dt/100). Inputs are held constant over each
// coarse step. Threshold kinds jump on crossing (hard: to 0, subtractive: by θ).
inline DenseSeries run_reference_ode(const Graph& g, const InputStream& inputs, double dt,
                                     double dt_fine, ResetMode reset = ResetMode::subtractive) {
  if (!(dt > 0.0) || !(dt_fine > 0.0) || dt_fine > dt / 100.0 * (1.0 + 1e-12))
    fail(ErrorCode::invalid_argument, "reference integration needs 0 < dt_fine <= dt/100");
  const auto diagnostics = validate(g);
  if (!diagnostics.empty())
    fail(ErrorCode::invalid_graph, "cannot run invalid graph: " + diagnostics.front().to_string());
  NodeId target;
  for (const auto& [id, node] : g.nodes()) {
    if (!is_stateful(node.kind())) continue;
    if (!target.empty()) fail(ErrorCode::invalid_argument, "graph has more than one stateful node");
    target = id;
  }
  if (target.empty()) fail(ErrorCode::invalid_argument, "graph has no stateful node");
  const Schedule sched = build_schedule(g);
  for (const auto& e : sched.back_edges)
    if (e.target.node == target || e.source.node == target)
      fail(ErrorCode::invalid_argument, "reference integration requires a feed-forward node");

  const Node& node = g.node(target);
  const Shape shape = node.ports().outputs.front().shape;
  const auto substeps = static_cast<std::size_t>(std::llround(dt / dt_fine));
  const double h = dt / static_cast<double>(substeps);

  NeuronState state{Tensor::zeros(shape), Tensor::zeros(shape)};
  if (const auto* p = std::get_if<LeakyIntegratorParams>(&node.params)) state.v = p->v_leak;
  if (const auto* p = std::get_if<LifParams>(&node.params)) state.v = p->v_leak;
  if (const auto* p = std::get_if<CubaLifParams>(&node.params)) state.v = p->v_leak;
  const Tensor* threshold = nullptr;
  if (const auto* p = std::get_if<LifParams>(&node.params)) threshold = &p->threshold;
  if (const auto* p = std::get_if<IfParams>(&node.params)) threshold = &p->threshold;
  if (const auto* p = std::get_if<CubaLifParams>(&node.params)) threshold = &p->threshold;

  DenseSeries out;
  out.dt_fine = h;
  std::map<NodeId, Tensor> values;
  for (std::size_t t = 0; t < inputs.steps; ++t) {
    Tensor drive = Tensor::zeros(shape);
    for (const auto& id : sched.order) {
      const Node& n = g.node(id);
      if (id == target) {
        for (const auto& e : g.incoming(id))
          if (!is_reset_edge(e))
            for (std::size_t k = 0; k < drive.size(); ++k) drive[k] += values.at(e.source.node)[k];
        break;
      }
      if (n.kind() == Kind::input) {
        values[id] = inputs.series.at(id).at(t);
        continue;
      }
      if (is_stateful(n.kind()) || n.kind() == Kind::delay)
        fail(ErrorCode::invalid_argument, "reference integration supports stateless preprocessing only");
      Tensor x = Tensor::zeros(n.ports().inputs.front().shape);
      for (const auto& e : g.incoming(id))
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += values.at(e.source.node)[k];
      values[id] = n.kind() == Kind::output ? x : stateless_apply(n.params, x);
    }
    for (std::size_t s = 0; s < substeps; ++s) {
      const auto d = continuous_rhs(node.params, state, drive);
      Tensor ev = Tensor::zeros(shape);
      for (std::size_t k = 0; k < shape.numel(); ++k) {
        state.v[k] += h * d.dv[k];
        if (!d.du.empty()) state.u[k] += h * d.du[k];
        if (threshold && state.v[k] >= (*threshold)[k]) {
          ev[k] = 1.0;
          state.v[k] = reset == ResetMode::hard ? 0.0 : state.v[k] - (*threshold)[k];
        }
      }
      out.v.push_back(state.v);
      out.u.push_back(state.u);
      out.events.push_back(std::move(ev));
    }
  }
  return out;
}

}  // namespace nir
