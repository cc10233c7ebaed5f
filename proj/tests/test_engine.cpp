#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace nirtest;

namespace {

Graph recurrent_pair() {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{1}});
  b.add_node("lif", lif(1, 0.01, 4.0, 0.0, 1.0));
  b.add_node("w", LinearParams{Tensor::matrix(1, 1, {0.5})});
  b.add_node("out", OutputParams{Shape{1}});
  b.connect("in", "lif").connect("lif", "w").connect("w", "lif").connect("lif", "out");
  return std::move(b).build();
}

// in -> Linear -> LI -> Scale -> out, linear in the input when v_leak = 0.
Graph linear_chain() {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{2}});
  b.add_node("a", LinearParams{Tensor::matrix(2, 2, {1.0, -0.5, 0.25, 2.0})});
  b.add_node("li", LeakyIntegratorParams{filled(2, 0.01), filled(2, 3.0), filled(2, 0.0)});
  b.add_node("s", ScaleParams{vec({2.0, -1.0})});
  b.add_node("d", DelayParams{vec({0.0, 2e-3})});
  b.add_node("out", OutputParams{Shape{2}});
  b.connect("in", "a").connect("a", "li").connect("li", "s").connect("s", "d").connect("d", "out");
  return std::move(b).build();
}

std::vector<Tensor> output_of(const SimulationTrace& t, const std::string& id = "out") {
  return t.nodes.at(id).output;
}

}  // namespace

TEST(Schedule, ChainOrder) {
  const Schedule s = build_schedule(single_node(lif(1, 0.01, 1.0, 0.0, 1.0), 1));
  EXPECT_EQ(s.order, (std::vector<NodeId>{"in", "lif1", "out"}));
  EXPECT_TRUE(s.back_edges.empty());
}

TEST(Schedule, RecurrentBackEdge) {
  const Schedule s = build_schedule(recurrent_pair());
  ASSERT_EQ(s.back_edges.size(), 1u);
  EXPECT_EQ(s.back_edges.begin()->source.node, "w");
  EXPECT_EQ(s.back_edges.begin()->target.node, "lif");
  EXPECT_EQ(s.order, (std::vector<NodeId>{"in", "lif", "out", "w"}));
}

TEST(Schedule, StatelessCycleRejected) {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{1}});
  b.add_node("a", ScaleParams{vec({1.0})});
  b.add_node("b", ScaleParams{vec({1.0})});
  b.add_node("out", OutputParams{Shape{1}});
  b.connect("in", "a").connect("a", "b").connect("b", "a").connect("b", "out");
  try {
    build_schedule(std::move(b).build());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cycle_without_state);
  }
}

TEST(Run, RecurrenceUsesPreviousStep) {
  // The feedback weight only sees lif's output one step later.
  const Graph g = recurrent_pair();
  const auto t = run(g, DialectConfig{}, constant_input("in", 30, {1.0}), {"w"});
  const auto& w = t.nodes.at("w").output;
  const auto& out = output_of(t);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_EQ(w[k][0], 0.5 * out[k][0]);
  EXPECT_FALSE(event_times(out).empty());
}

TEST(Run, Deterministic) {
  RandomGraphs gen(17);
  for (int k = 0; k < 20; ++k) {
    const Graph g = gen.graph();
    const InputStream in = gen.inputs(g, 40);
    EXPECT_EQ(run(g, DialectConfig{}, in, {"*"}), run(g, DialectConfig{}, in, {"*"}));
  }
}

TEST(Run, ZeroInputStaysAtRest) {
  const Graph g = single_node(lif(3, 0.01, 2.0, 0.0, 1.0), 3);
  const auto t = run(g, DialectConfig{}, zero_inputs(g, 50), {"lif1"});
  for (const auto& x : t.nodes.at("lif1").output) EXPECT_EQ(x, Tensor::zeros(Shape{3}));
  for (const auto& v : t.nodes.at("lif1").v) EXPECT_EQ(v, Tensor::zeros(Shape{3}));
}

TEST(Run, Linearity) {
  const Graph g = linear_chain();
  RandomGraphs gen(2);
  InputStream x, y, z;
  x.steps = y.steps = z.steps = 60;
  const double a = 0.7, b = -1.3;
  for (int t = 0; t < 60; ++t) {
    const Tensor p = gen.random_tensor(Shape{2}, -1, 1), q = gen.random_tensor(Shape{2}, -1, 1);
    x.series["in"].push_back(p);
    y.series["in"].push_back(q);
    z.series["in"].push_back(vec({a * p[0] + b * q[0], a * p[1] + b * q[1]}));
  }
  for (Integrator m : {Integrator::forward_euler, Integrator::exponential_euler}) {
    DialectConfig c;
    c.decay = m;
    const auto ox = output_of(run(g, c, x)), oy = output_of(run(g, c, y)), oz = output_of(run(g, c, z));
    for (std::size_t t = 0; t < oz.size(); ++t)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(oz[t][k], a * ox[t][k] + b * oy[t][k], 1e-10);
  }
}

TEST(Run, IdentityScaleInsertionIsExact) {
  RandomGraphs gen(23);
  for (int n = 0; n < 20; ++n) {
    const Graph g = gen.graph();
    const InputStream in = gen.inputs(g, 40);
    // Insert Scale(1) after the first input.
    const NodeId src = g.nodes_of_kind(Kind::input).front();
    GraphBuilder b(g);
    const NodeId id = unique_id(b, "ident");
    const std::size_t size = g.node(src).ports().outputs.front().shape.numel();
    b.add_node(id, ScaleParams{filled(size, 1.0)});
    for (const auto& e : g.outgoing(src)) {
      b.remove_edge(e);
      b.add_edge(make_edge(id, e.target.node, e.target.port));
    }
    b.connect(src, id);
    const Graph h = std::move(b).build();
    const auto a = run(g, DialectConfig{}, in), c = run(h, DialectConfig{}, in);
    for (const auto& [oid, rec] : a.nodes) EXPECT_EQ(rec.output, c.nodes.at(oid).output) << n;
  }
}

TEST(Run, DelayShiftsByWholeSteps) {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{2}});
  b.add_node("d", DelayParams{vec({0.0, 3e-3})});
  b.add_node("out", OutputParams{Shape{2}});
  b.connect("in", "d").connect("d", "out");
  const Graph g = std::move(b).build();
  RandomGraphs gen(8);
  const InputStream in = gen.inputs(g, 30);
  const auto out = output_of(run(g, DialectConfig{}, in));
  for (std::size_t t = 0; t < 30; ++t) {
    EXPECT_EQ(out[t][0], in.series.at("in")[t][0]);
    EXPECT_EQ(out[t][1], t < 3 ? 0.0 : in.series.at("in")[t - 3][1]);
  }
}

TEST(Run, InputTimeShift) {
  // Prefixing k zero steps delays every output of a system at rest by k.
  const Graph g = drift_graph();
  const InputStream base = drift_input(g);
  InputStream shifted = base;
  const std::size_t k = 7;
  shifted.steps += k;
  auto& s = shifted.series.at("in");
  s.insert(s.begin(), k, Tensor::zeros(Shape{1}));
  for (const char* name : {"norse", "snntorch", "lava_dl", "rockpool_sinabs"}) {
    const auto a = output_of(run(g, named_config(name, 1e-3), base));
    const auto b = output_of(run(g, named_config(name, 1e-3), shifted));
    for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t], b[t + k]) << name;
  }
}

TEST(Run, FanInSums) {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{1}});
  b.add_node("a", ScaleParams{vec({2.0})});
  b.add_node("b", ScaleParams{vec({3.0})});
  b.add_node("out", OutputParams{Shape{1}});
  b.connect("in", "a").connect("in", "b").connect("a", "out").connect("b", "out");
  const auto out = output_of(run(std::move(b).build(), DialectConfig{}, series("in", {{1.0}, {-2.0}})));
  EXPECT_EQ(out[0][0], 5.0);
  EXPECT_EQ(out[1][0], -10.0);
}

TEST(Run, ResetPortClearsState) {
  GraphBuilder b;
  b.add_node("in", InputParams{Shape{1}});
  b.add_node("clr", InputParams{Shape{1}});
  b.add_node("acc", IntegratorParams{vec({1000.0})});
  b.add_node("out", OutputParams{Shape{1}});
  b.connect("in", "acc").connect("acc", "out");
  b.add_edge(make_edge("clr", "acc", std::string(kResetPort)));
  const Graph g = std::move(b).build();
  InputStream in = constant_input("in", 4, {1.0});
  in.series["clr"] = {vec({0.0}), vec({-0.5}), vec({0.0}), vec({0.0})};
  DialectConfig hard;
  hard.reset = ResetMode::hard;
  const auto h = run(g, hard, in, {"acc"}).nodes.at("acc").v;
  EXPECT_DOUBLE_EQ(h[0][0], 1.0);
  EXPECT_DOUBLE_EQ(h[1][0], 0.0);
  EXPECT_DOUBLE_EQ(h[2][0], 1.0);
  EXPECT_DOUBLE_EQ(h[3][0], 2.0);
  // Subtractive mode adds the reset value.
  const auto s = run(g, DialectConfig{}, in, {"acc"}).nodes.at("acc").v;
  EXPECT_DOUBLE_EQ(s[1][0], 1.5);
  EXPECT_DOUBLE_EQ(s[3][0], 3.5);
}

TEST(Run, RejectsBadInputs) {
  const Graph g = single_node(lif(2, 0.01, 1.0, 0.0, 1.0), 2);
  EXPECT_THROW(run(g, DialectConfig{}, InputStream{}), Error);
  InputStream wrong = constant_input("in", 3, {1.0});
  EXPECT_THROW(run(g, DialectConfig{}, wrong), Error);
  InputStream ragged = constant_input("in", 3, {1.0, 0.0});
  ragged.steps = 4;
  EXPECT_THROW(run(g, DialectConfig{}, ragged), Error);
}

TEST(Run, DialectDriftSpikeTimes) {
  const Graph g = drift_graph();
  const InputStream in = drift_input(g);
  auto times = [&](const char* name) { return event_times(output_of(run(g, named_config(name, 1e-3), in))); };
  EXPECT_EQ(times("norse"), (std::vector<std::size_t>{23, 37, 59, 69, 74, 84, 95}));
  EXPECT_EQ(times("rockpool_sinabs"), (std::vector<std::size_t>{23, 37, 59, 69, 71, 83, 85}));
  EXPECT_EQ(times("lava_dl"), (std::vector<std::size_t>{24, 38, 60, 70, 75, 85, 96}));
}

TEST(ReferenceOde, MatchesClosedForm) {
  const double tau = 0.01, r = 2.0, i0 = 0.75, dt = 1e-3;
  const Graph g = single_node(LeakyIntegratorParams{vec({tau}), vec({r}), vec({0.0})}, 1, "li");
  const auto dense = run_reference_ode(g, constant_input("in", 20, {i0}), dt, dt / 1000);
  ASSERT_EQ(dense.v.size(), 20000u);
  for (std::size_t s = 999; s < dense.v.size(); s += 1000) {
    const double t = static_cast<double>(s + 1) * dense.dt_fine;
    EXPECT_NEAR(dense.v[s][0], lif_exact(tau, r, 0.0, 0.0, i0, t), 1e-3 * r * i0);
  }
}

TEST(ReferenceOde, RejectsCoarseStepAndRecurrence) {
  const Graph g = single_node(lif(1, 0.01, 1.0, 0.0, 1.0), 1);
  EXPECT_THROW(run_reference_ode(g, constant_input("in", 2, {1.0}), 1e-3, 1e-4), Error);
  EXPECT_THROW(run_reference_ode(recurrent_pair(), constant_input("in", 2, {1.0}), 1e-3, 1e-6), Error);
}

TEST(TraceIo, CsvInput) {
  const Graph g = single_node(lif(2, 0.01, 1.0, 0.0, 1.0), 2);
  const auto in = read_input_csv(g, "# comment\nin.output[1],in.output[0]\n1,2\n3,4.5\n");
  ASSERT_EQ(in.steps, 2u);
  EXPECT_EQ(in.series.at("in")[0], vec({2.0, 1.0}));
  EXPECT_EQ(in.series.at("in")[1], vec({4.5, 3.0}));
  EXPECT_EQ(read_input_csv(g, inputs_to_csv(in)).series, in.series);
}

TEST(TraceIo, CsvErrors) {
  const Graph g = single_node(lif(2, 0.01, 1.0, 0.0, 1.0), 2);
  EXPECT_THROW(read_input_csv(g, "in.output[0]\n1\n"), Error);
  EXPECT_THROW(read_input_csv(g, "in.output[0],in.output[1]\n1\n"), Error);
  EXPECT_THROW(read_input_csv(g, "in.output[0],in.output[1]\n1,x\n"), Error);
  EXPECT_THROW(read_input_csv(g, "bogus,in.output[1]\n1,2\n"), Error);
  EXPECT_THROW(read_input_csv(g, ""), Error);
}

TEST(TraceIo, JsonInput) {
  const Graph g = single_node(lif(2, 0.01, 1.0, 0.0, 1.0), 2);
  const auto in = read_input_json(g, json::parse(R"({"steps":2,"nodes":{"in":[[1,0],[0,1]]}})"));
  EXPECT_EQ(in.steps, 2u);
  EXPECT_EQ(in.series.at("in")[1], vec({0.0, 1.0}));
  EXPECT_THROW(read_input_json(g, json::parse(R"({"steps":3,"nodes":{"in":[[1,0]]}})")), Error);
  EXPECT_THROW(read_input_json(g, json::parse(R"({"nodes":{"in":[[1]]}})")), Error);
}

TEST(TraceIo, TraceCsvHasOutputColumns) {
  const Graph g = drift_graph();
  const auto t = run(g, DialectConfig{}, drift_input(g), {"lif1"});
  const std::string csv = trace_to_csv(t);
  EXPECT_NE(csv.find("lif1.output[0]"), std::string::npos);
  EXPECT_NE(csv.find("out.output[0]"), std::string::npos);
  const json j = trace_to_json(t);
  EXPECT_EQ(j.at("steps"), 100);
}
