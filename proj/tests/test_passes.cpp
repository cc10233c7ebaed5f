#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace nirtest;

namespace {

std::vector<DialectConfig> exact_configs() {
  DialectConfig hard;
  hard.reset = ResetMode::hard;
  DialectConfig expo;
  expo.decay = Integrator::exponential_euler;
  return {DialectConfig{}, hard, expo};
}

std::map<NodeId, std::vector<Tensor>> outputs(const SimulationTrace& t) {
  std::map<NodeId, std::vector<Tensor>> out;
  for (const auto& [id, rec] : t.nodes) out[id] = rec.output;
  return out;
}

}  // namespace

TEST(Decompose, LifStructure) {
  const Graph d = decompose(single_node(lif(2, 0.01, 1.0, 0.0, 0.5), 2));
  EXPECT_EQ(d.node("lif1.li").kind(), Kind::li);
  EXPECT_EQ(d.node("lif1.spike").kind(), Kind::spike);
  EXPECT_EQ(d.node("lif1.reset").kind(), Kind::linear);
  EXPECT_EQ(std::get<LinearParams>(d.node("lif1.reset").params).weight,
            Tensor::matrix(2, 2, {-0.5, 0.0, 0.0, -0.5}));
  EXPECT_FALSE(d.contains("lif1"));
  EXPECT_TRUE(is_valid(d));
  EXPECT_EQ(d.incoming("out").front().source.node, "lif1.spike");
}

TEST(Decompose, CubaStructure) {
  const CubaLifParams p{filled(1, 2e-3), filled(1, 1e-2), filled(1, 1.0), filled(1, 0.0), filled(1, 2.0),
                        filled(1, 1.0)};
  const Graph d = decompose(single_node(p, 1, "c"));
  for (const char* id : {"c.syn", "c.w", "c.lif.li", "c.lif.spike", "c.lif.reset"})
    EXPECT_TRUE(d.contains(id)) << id;
  EXPECT_EQ(std::get<LeakyIntegratorParams>(d.node("c.syn").params).r, filled(1, 2.0));
  // Only the CuBa layer when asked for it.
  const Graph only = decompose(single_node(p, 1, "c"), {Kind::cuba_lif});
  EXPECT_EQ(only.node("c.lif").kind(), Kind::lif);
}

TEST(Decompose, FidelityOnRandomGraphs) {
  RandomGraphs gen(101);
  for (int n = 0; n < 60; ++n) {
    const Graph g = gen.graph();
    const Graph d = decompose(g);
    ASSERT_TRUE(is_valid(d)) << serialize(g);
    const InputStream in = gen.inputs(g, 60);
    for (const auto& cfg : exact_configs())
      ASSERT_EQ(outputs(run(g, cfg, in)), outputs(run(d, cfg, in))) << n;
  }
}

TEST(Recompose, RoundTripOnRandomGraphs) {
  RandomGraphs gen(202);
  for (int n = 0; n < 100; ++n) {
    const Graph g = gen.graph();
    EXPECT_EQ(recompose(decompose(g)), g) << n;
  }
}

TEST(Recompose, GuardsOnMismatchedThreshold) {
  Graph d = decompose(single_node(lif(1, 0.01, 1.0, 0.0, 0.5), 1));
  GraphBuilder b(d);
  b.set_params("lif1.reset", LinearParams{Tensor::matrix(1, 1, {-0.4})});
  const Graph tampered = std::move(b).build();
  const Graph r = recompose(tampered);
  EXPECT_EQ(r, tampered);
  EXPECT_TRUE(r.nodes_of_kind(Kind::lif).empty());
}

TEST(Recompose, LeavesSharedStateAlone) {
  Graph d = decompose(single_node(lif(1, 0.01, 1.0, 0.0, 0.5), 1));
  GraphBuilder b(d);
  b.add_node("tap", OutputParams{Shape{1}});
  b.connect("lif1.li", "tap");
  const Graph shared = std::move(b).build();
  EXPECT_EQ(recompose(shared), shared);
}

TEST(Recompose, KindsFilter) {
  const Graph d = decompose(single_node(lif(1, 0.01, 1.0, 0.0, 0.5), 1));
  RecomposeOptions o;
  o.kinds = {Kind::if_};
  EXPECT_EQ(recompose(d, o), d);
}

TEST(Recompose, AnnotatesRecurrence) {
  const Graph g = load_graph(source_path("data/recurrent_lif.nir.json"));
  RecomposeOptions o;
  o.annotate_recurrent = true;
  const Graph r = recompose(decompose(g), o);
  EXPECT_EQ(r.metadata_value("recurrent.pop"), "w_rec");
  EXPECT_EQ(annotate_recurrent(g).metadata_value("recurrent.pop"), "w_rec");
  EXPECT_TRUE(annotate_recurrent(drift_graph()).metadata_value("recurrent.lif1").empty());
}

TEST(SimplifyAffine, ZeroBiasBecomesLinear) {
  const Graph g = load_graph(source_path("data/affine_zero_bias.nir.json"));
  const Graph s = simplify_affine(g);
  EXPECT_TRUE(s.nodes_of_kind(Kind::affine).empty());
  EXPECT_EQ(simplify_affine(s), s);
}

TEST(SimplifyAffine, TinyBiasIsKept) {
  const Graph g = single_node(AffineParams{Tensor::matrix(1, 1, {2.0}), vec({1e-300})}, 1, "a");
  EXPECT_EQ(simplify_affine(g), g);
  const Graph z = single_node(AffineParams{Tensor::matrix(1, 1, {2.0}), vec({-0.0})}, 1, "a");
  EXPECT_EQ(simplify_affine(z).node("a").kind(), Kind::linear);
}

TEST(SimplifyAffine, PreservesBehaviour) {
  RandomGraphs gen(7);
  for (int n = 0; n < 40; ++n) {
    const Graph g = gen.graph();
    const InputStream in = gen.inputs(g, 30);
    EXPECT_EQ(outputs(run(g, DialectConfig{}, in)), outputs(run(simplify_affine(g), DialectConfig{}, in)));
  }
}

TEST(Quantize, Example) {
  const auto q = quantize_tensor(vec({0.5, -1.0, 1.0}), 8);
  EXPECT_EQ(q.ints, (std::vector<std::int64_t>{64, -127, 127}));
  EXPECT_DOUBLE_EQ(q.scale, 1.0 / 127.0);
}

TEST(Quantize, ZerosAndNarrowWidths) {
  const auto z = quantize_tensor(Tensor::zeros(Shape{3}), 8);
  EXPECT_EQ(z.ints, (std::vector<std::int64_t>{0, 0, 0}));
  EXPECT_EQ(z.scale, 1.0);
  const auto two = quantize_tensor(vec({0.2, -0.9, 0.6}), 2);
  EXPECT_EQ(two.ints, (std::vector<std::int64_t>{0, -1, 1}));
  EXPECT_THROW(quantize_tensor(vec({1.0}), 1), Error);
  EXPECT_THROW(quantize_tensor(vec({1.0}), 33), Error);
}

TEST(Quantize, ErrorBound) {
  RandomGraphs gen(12);
  for (int bits : {2, 4, 8, 16}) {
    for (int n = 0; n < 30; ++n) {
      const Tensor w = gen.random_tensor(Shape{4, 5}, -3, 3);
      const auto q = quantize_tensor(w, bits);
      const Tensor back = q.dequantized();
      for (std::size_t k = 0; k < w.size(); ++k) {
        EXPECT_LE(std::abs(back[k] - w[k]), q.scale / 2 * (1 + 1e-12));
        EXPECT_LE(std::abs(q.ints[k]), quant_max(bits));
      }
    }
  }
}

TEST(Quantize, GraphWeightsAndMetadata) {
  const Graph g = load_graph(source_path("data/recurrent_lif.nir.json"));
  const auto r = quantize(g, 4);
  EXPECT_EQ(r.graph.metadata_value("quant.weight_bits"), "4");
  EXPECT_EQ(r.tensors.size(), 3u);
  for (const auto& t : r.tensors) {
    EXPECT_FALSE(r.graph.metadata_value("quant." + t.node + ".weight.scale").empty());
    EXPECT_TRUE(is_valid(r.graph));
  }
  // Re-quantizing quantized weights is a fixpoint.
  const auto again = quantize(r.graph, 4);
  for (std::size_t k = 0; k < r.tensors.size(); ++k) EXPECT_EQ(again.tensors[k].ints, r.tensors[k].ints);
}
