#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nir/graph.hpp"

namespace nir {

// ---------------------------------------------------------------------------
// Higher-order decomposition
//
//   LIF x      -> x.li (LI) -> x.spike (Spike) -> x.reset (Linear diag(-θ)) -> x.li.reset
//   IF x       -> x.integrator (Integrator) -> x.spike -> x.reset -> x.integrator.reset
//   CuBa-LIF c -> c.syn (LI, R = w_in, v_leak = 0) -> c.w (identity Linear) -> c.lif (LIF)
//
// External edges into "input"/"reset" and out of "output" are re-attached to
// the corresponding member node. Only rank-1 neurons are decomposed; a
// Linear feedback needs a vector-shaped port.
// ---------------------------------------------------------------------------

inline const std::set<Kind>& higher_order_kinds() {
  static const std::set<Kind> kinds{Kind::if_, Kind::lif, Kind::cuba_lif};
  return kinds;
}

namespace detail {

inline Tensor negated_diagonal(const Tensor& threshold) {
  std::vector<double> diag(threshold.size());
  for (std::size_t k = 0; k < diag.size(); ++k) diag[k] = -threshold[k];
  return Tensor::diagonal(diag);
}

// Moves the edges incident to `from` onto new endpoints. `input_to` and
// `reset_to` receive edges targeting from.input / from.reset, `output_from`
// becomes the source of edges leaving from.output.
inline void reattach(GraphBuilder& b, const Graph& g, const NodeId& from, const NodeId& input_to,
                     const NodeId& reset_to, const NodeId& output_from) {
  for (const auto& e : g.incoming(from)) {
    Edge moved = e;
    moved.target.node = e.target.port == kResetPort ? reset_to : input_to;
    if (e.source.node == from) moved.source.node = output_from;
    b.add_edge(moved);
  }
  for (const auto& e : g.outgoing(from)) {
    if (e.target.node == from) continue;  // self-loop handled above
    Edge moved = e;
    moved.source.node = output_from;
    b.add_edge(moved);
  }
}

// Replaces a threshold neuron by its state node, Spike and reset feedback.
inline void expand_threshold_neuron(GraphBuilder& b, const Graph& g, const NodeId& id,
                                    PrimitiveParams state_params, const char* state_suffix,
                                    const Tensor& threshold) {
  const NodeId state = unique_id(b, id + state_suffix);
  b.add_node(state, std::move(state_params));
  const NodeId spike = unique_id(b, id + ".spike");
  b.add_node(spike, SpikeParams{threshold});
  const NodeId reset = unique_id(b, id + ".reset");
  b.add_node(reset, LinearParams{negated_diagonal(threshold)});
  b.connect(state, spike);
  b.connect(spike, reset);
  b.connect(reset, state, std::string(kResetPort));
  reattach(b, g, id, state, state, spike);
}

}  // namespace detail

inline Graph decompose(const Graph& g, const std::set<Kind>& kinds = higher_order_kinds()) {
  Graph current = g;
  // CuBa first so that its inner LIF can be expanded in the same call.
  for (Kind pass : {Kind::cuba_lif, Kind::lif, Kind::if_}) {
    if (!kinds.count(pass)) continue;
    for (const auto& id : current.nodes_of_kind(pass)) {
      const Node& node = current.node(id);
      if (node.ports().outputs.front().shape.rank() != 1) continue;
      GraphBuilder b(current);
      b.remove_node(id);
      if (const auto* p = std::get_if<LifParams>(&node.params)) {
        detail::expand_threshold_neuron(b, current, id, LeakyIntegratorParams{p->tau, p->r, p->v_leak},
                                        ".li", p->threshold);
      } else if (const auto* p = std::get_if<IfParams>(&node.params)) {
        detail::expand_threshold_neuron(b, current, id, IntegratorParams{p->r}, ".integrator",
                                        p->threshold);
      } else if (const auto* p = std::get_if<CubaLifParams>(&node.params)) {
        const NodeId syn = unique_id(b, id + ".syn");
        b.add_node(syn, LeakyIntegratorParams{p->tau_syn, p->w_in, Tensor::zeros(p->v_leak.shape())});
        const NodeId w = unique_id(b, id + ".w");
        b.add_node(w, LinearParams{Tensor::identity(p->tau_mem.size())});
        const NodeId lif = unique_id(b, id + ".lif");
        b.add_node(lif, LifParams{p->tau_mem, p->r, p->v_leak, p->threshold});
        b.connect(syn, w);
        b.connect(w, lif);
        detail::reattach(b, current, id, syn, lif, lif);
      }
      current = std::move(b).build();
    }
  }
  return current;
}

// ---------------------------------------------------------------------------
// Recomposition by anchored matching
// ---------------------------------------------------------------------------

namespace detail {

inline std::string strip_suffix(const std::string& id, const std::string& suffix) {
  if (id.size() > suffix.size() && id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0)
    return id.substr(0, id.size() - suffix.size());
  return id;
}

inline bool is_negated_diagonal(const Tensor& w, const Tensor& threshold) {
  const std::size_t n = threshold.size();
  if (w.shape() != Shape{n, n}) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = w.at(i, j);
      if (i != j) {
        if (x != 0.0) return false;
        continue;
      }
      const double theta = threshold[i];
      if (std::abs(x + theta) > 1e-9 * std::abs(theta)) return false;
    }
  }
  return true;
}

inline bool is_identity(const Tensor& w) {
  return w.shape().rank() == 2 && w.shape()[0] == w.shape()[1] &&
         w == Tensor::identity(w.shape()[0]);
}

// Rebuilds the graph with `members` collapsed into one node `id`.
// `input_of`/`reset_of` name the member whose input/reset port edges become
// the new node's; `output_of` names the member whose outgoing edges survive.
inline Graph collapse(const Graph& g, const std::set<NodeId>& members, const NodeId& id,
                      PrimitiveParams params, const NodeId& input_of, const NodeId& reset_of,
                      const NodeId& output_of) {
  GraphBuilder b;
  b.set_version(g.version());
  for (const auto& [k, v] : g.metadata()) b.set_metadata(k, v);
  for (const auto& [nid, node] : g.nodes())
    if (!members.count(nid)) b.add_node(nid, node.params);
  b.add_node(id, std::move(params));
  for (const auto& e : g.edges()) {
    const bool src_in = members.count(e.source.node) > 0;
    const bool dst_in = members.count(e.target.node) > 0;
    Edge moved = e;
    if (src_in) {
      if (e.source.node != output_of) continue;
      moved.source.node = id;
    }
    if (dst_in) {
      const bool keep = (e.target.node == input_of && e.target.port == kInputPort) ||
                        (e.target.node == reset_of && e.target.port == kResetPort);
      if (!keep) continue;
      moved.target.node = id;
    }
    b.add_edge(moved);
  }
  return std::move(b).build();
}

struct NeuronMatch {
  NodeId state, spike, feedback;
  Kind kind;
};

// Anchored at a Spike node: state -> spike -> feedback -> state.reset with
// no other use of the internal wires.
inline std::optional<NeuronMatch> match_threshold_neuron(const Graph& g, const NodeId& spike) {
  const auto& sp = std::get<SpikeParams>(g.node(spike).params);
  if (sp.threshold.shape().rank() != 1) return std::nullopt;
  const auto in = g.incoming(spike);
  if (in.size() != 1) return std::nullopt;
  const NodeId state = in.front().source.node;
  const Kind state_kind = g.node(state).kind();
  if (state_kind != Kind::li && state_kind != Kind::integrator) return std::nullopt;
  if (state == spike) return std::nullopt;
  for (const auto& e : g.outgoing(state))
    if (e.target.node != spike) return std::nullopt;
  if (g.outgoing(state).size() != 1) return std::nullopt;

  std::optional<NodeId> feedback;
  for (const auto& e : g.outgoing(spike)) {
    const Node& cand = g.node(e.target.node);
    if (cand.kind() != Kind::linear) continue;
    const auto cin = g.incoming(cand.id);
    const auto cout = g.outgoing(cand.id);
    if (cin.size() != 1 || cout.size() != 1) continue;
    if (cout.front().target.node != state || cout.front().target.port != kResetPort) continue;
    if (!is_negated_diagonal(std::get<LinearParams>(cand.params).weight, sp.threshold)) continue;
    if (feedback) return std::nullopt;  // ambiguous
    feedback = cand.id;
  }
  if (!feedback) return std::nullopt;
  return NeuronMatch{state, spike, *feedback, state_kind == Kind::li ? Kind::lif : Kind::if_};
}

}  // namespace detail

// Adds metadata "recurrent.<neuron>" = "<linear>" for every LIF or CuBa-LIF
// population with a Linear self-recurrence (neuron -> linear -> neuron).
inline Graph annotate_recurrent(const Graph& g) {
  GraphBuilder b(g);
  for (const auto& [id, node] : g.nodes()) {
    if (node.kind() != Kind::lif && node.kind() != Kind::cuba_lif) continue;
    for (const auto& e : g.outgoing(id)) {
      const Node& mid = g.node(e.target.node);
      if (mid.kind() != Kind::linear) continue;
      for (const auto& back : g.outgoing(mid.id)) {
        if (back.target.node == id && back.target.port == kInputPort) {
          b.set_metadata("recurrent." + id, mid.id);
        }
      }
    }
  }
  return std::move(b).build();
}

struct RecomposeOptions {
  std::set<Kind> kinds = higher_order_kinds();
  bool annotate_recurrent = false;
};

// Replaces maximal non-overlapping composition patterns by higher-order
// nodes. Anchors are visited in lexicographic order; the first match wins.
inline Graph recompose(const Graph& g, const RecomposeOptions& opts = {}) {
  Graph current = g;
  const bool want_lif = opts.kinds.count(Kind::lif) > 0;
  const bool want_if = opts.kinds.count(Kind::if_) > 0;
  for (const auto& spike : g.nodes_of_kind(Kind::spike)) {
    if (!current.contains(spike)) continue;
    const auto m = detail::match_threshold_neuron(current, spike);
    if (!m) continue;
    if ((m->kind == Kind::lif && !want_lif) || (m->kind == Kind::if_ && !want_if)) continue;
    const Tensor& threshold = std::get<SpikeParams>(current.node(spike).params).threshold;
    PrimitiveParams params;
    NodeId id;
    if (m->kind == Kind::lif) {
      const auto& li = std::get<LeakyIntegratorParams>(current.node(m->state).params);
      params = LifParams{li.tau, li.r, li.v_leak, threshold};
      id = detail::strip_suffix(m->state, ".li");
    } else {
      const auto& in = std::get<IntegratorParams>(current.node(m->state).params);
      params = IfParams{in.r, threshold};
      id = detail::strip_suffix(m->state, ".integrator");
    }
    const std::set<NodeId> members{m->state, m->spike, m->feedback};
    if (id != m->state && current.contains(id) && !members.count(id)) id = m->state;
    current = detail::collapse(current, members, id, std::move(params), m->state, m->state,
                               m->spike);
  }

  if (opts.kinds.count(Kind::cuba_lif)) {
    for (const auto& lif : current.nodes_of_kind(Kind::lif)) {
      if (!current.contains(lif)) continue;
      const auto in = current.incoming(lif);
      std::vector<Edge> drive;
      for (const auto& e : in)
        if (e.target.port == kInputPort) drive.push_back(e);
      if (drive.size() != 1) continue;
      const NodeId w = drive.front().source.node;
      if (current.node(w).kind() != Kind::linear) continue;
      if (!detail::is_identity(std::get<LinearParams>(current.node(w).params).weight)) continue;
      if (current.outgoing(w).size() != 1 || current.incoming(w).size() != 1) continue;
      const NodeId syn = current.incoming(w).front().source.node;
      if (current.node(syn).kind() != Kind::li) continue;
      if (current.outgoing(syn).size() != 1) continue;
      bool syn_reset = false;
      for (const auto& e : current.incoming(syn)) syn_reset |= e.target.port == kResetPort;
      if (syn_reset) continue;
      const auto& s = std::get<LeakyIntegratorParams>(current.node(syn).params);
      if (!all_of(s.v_leak, [](double x) { return x == 0.0; })) continue;
      const auto& f = std::get<LifParams>(current.node(lif).params);
      if (s.tau.shape() != f.tau.shape()) continue;
      NodeId id = detail::strip_suffix(lif, ".lif");
      const std::set<NodeId> members{syn, w, lif};
      if (id != lif && current.contains(id) && !members.count(id)) id = lif;
      current = detail::collapse(current, members, id,
                                 CubaLifParams{s.tau, f.tau, f.r, f.v_leak, s.r, f.threshold}, syn,
                                 lif, lif);
    }
  }
  return opts.annotate_recurrent ? annotate_recurrent(current) : current;
}

// ---------------------------------------------------------------------------
// Algebraic simplification
// ---------------------------------------------------------------------------

// Affine nodes whose bias is exactly zero become Linear.
inline Graph simplify_affine(const Graph& g) {
  GraphBuilder b(g);
  for (const auto& id : g.nodes_of_kind(Kind::affine)) {
    const auto& p = std::get<AffineParams>(g.node(id).params);
    if (all_of(p.bias, [](double x) { return x == 0.0; })) b.set_params(id, LinearParams{p.weight});
  }
  return std::move(b).build();
}

}  // namespace nir
