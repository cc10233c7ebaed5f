#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace nirtest;

namespace {

std::vector<Tensor> train(std::vector<double> bits) {
  std::vector<Tensor> out;
  for (double b : bits) out.push_back(vec({b}));
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nir_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Cosine, GoldenValues) {
  const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1}, z{0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_NEAR(cosine_similarity(a, c), 0.7071067811865475, 1e-15);
  EXPECT_EQ(cosine_similarity(z, z), 1.0);
  EXPECT_EQ(cosine_similarity(a, z), 0.0);
  const std::vector<double> p{1, 2, 3}, q{4, 5, 6};
  EXPECT_NEAR(cosine_similarity(p, q), 32.0 / std::sqrt(14.0 * 77.0), 1e-15);
  EXPECT_THROW(cosine_similarity(p, a), Error);
}

TEST(Cosine, ScaleInvariantAndSymmetric) {
  RandomGraphs gen(5);
  for (int n = 0; n < 100; ++n) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = gen.uniform(0, 1);
    for (auto& x : b) x = gen.uniform(0, 1);
    const double s = gen.uniform(0.1, 10);
    std::vector<double> sa = a;
    for (auto& x : sa) x *= s;
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(sa, b), 1e-12);
    EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(b, a));
    EXPECT_LE(cosine_similarity(a, b), 1.0);
  }
}

TEST(Rates, BurnIn) {
  const auto r = rate_vector(train({1, 1, 0, 1, 0, 0}), 2);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r[0], 0.25);
}

TEST(SpikeCompare, FindsShift) {
  const auto a = train({0, 1, 0, 0, 1, 0, 0, 0});
  const auto b = train({0, 0, 0, 1, 0, 0, 1, 0});
  const auto r = spike_train_compare(a, b);
  EXPECT_EQ(r.best_shift, 2);
  EXPECT_TRUE(r.exact_match_at_shift);
  EXPECT_EQ(r.count_a, 2.0);
  EXPECT_EQ(r.count_b, 2.0);
  EXPECT_EQ(spike_train_compare(b, a).best_shift, -2);
}

TEST(SpikeCompare, IdenticalIsShiftZero) {
  const auto a = train({1, 0, 1, 1, 0});
  const auto r = spike_train_compare(a, a);
  EXPECT_EQ(r.best_shift, 0);
  EXPECT_TRUE(r.exact_match_at_shift);
  EXPECT_EQ(r.overlap, 3.0);
}

TEST(SpikeCompare, InexactPicksLargestOverlap) {
  const auto a = train({1, 0, 0, 1, 0, 0, 0, 0});
  const auto b = train({0, 1, 0, 0, 1, 0, 0, 1});
  const auto r = spike_train_compare(a, b);
  EXPECT_FALSE(r.exact_match_at_shift);
  EXPECT_EQ(r.best_shift, 1);
  EXPECT_EQ(r.overlap, 2.0);
  EXPECT_THROW(spike_train_compare(a, train({1})), Error);
}

TEST(SpikeCompare, EmptyTrainsMatch) {
  const auto z = train({0, 0, 0});
  EXPECT_TRUE(spike_train_compare(z, z).exact_match_at_shift);
}

TEST(CompareDialects, DialectDrift) {
  const Graph g = drift_graph();
  const InputStream in = drift_input(g);
  std::vector<DialectConfig> cfgs;
  for (const char* n : {"norse", "rockpool_sinabs", "lava_dl"}) cfgs.push_back(named_config(n, 1e-3));
  const auto c = compare_dialects(g, in, cfgs, "lif1");
  EXPECT_EQ(c.matrix.labels, (std::vector<std::string>{"lava_dl", "norse", "rockpool_sinabs"}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(c.matrix.values[i][i], 1.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c.matrix.values[i][j], c.matrix.values[j][i]);
  }
  ASSERT_EQ(c.pairs.size(), 3u);
  EXPECT_EQ(c.pairs[0].a, "lava_dl");
  EXPECT_EQ(c.pairs[0].b, "norse");
  // lava_dl fires one step late: norse is lava_dl shifted by -1.
  EXPECT_EQ(c.pairs[0].result.best_shift, -1);
  EXPECT_TRUE(c.pairs[0].result.exact_match_at_shift);
  EXPECT_EQ(c.pairs[0].result.count_a, c.pairs[0].result.count_b);
}

TEST(CompareDialects, SerialAndParallelAgree) {
  const Graph g = load_graph(source_path("data/recurrent_lif.nir.json"));
  RandomGraphs gen(3);
  const InputStream in = gen.inputs(g, 80);
  std::vector<DialectConfig> cfgs;
  for (const char* n : {"norse", "snntorch", "spinnaker2_fwd_euler"}) cfgs.push_back(named_config(n, 1e-3));
  CompareOptions serial;
  serial.parallel = false;
  const auto a = compare_dialects(g, in, cfgs, "pop");
  const auto b = compare_dialects(g, in, cfgs, "pop", serial);
  EXPECT_EQ(a.matrix.values, b.matrix.values);
  EXPECT_EQ(a.rates, b.rates);
}

TEST(CompareDialects, RejectsDuplicatesAndUnknownNode) {
  const Graph g = drift_graph();
  const InputStream in = drift_input(g);
  std::vector<DialectConfig> dup{named_config("norse", 1e-3), named_config("norse", 1e-3)};
  EXPECT_THROW(compare_dialects(g, in, dup, "lif1"), Error);
  EXPECT_THROW(compare_dialects(g, in, {named_config("norse", 1e-3)}, "nope"), Error);
}

TEST(Report, WritesFilesDeterministically) {
  const Graph g = drift_graph();
  const InputStream in = drift_input(g);
  std::vector<DialectConfig> cfgs;
  for (const char* n : {"norse", "lava_dl"}) cfgs.push_back(named_config(n, 1e-3));
  const auto c = compare_dialects(g, in, cfgs, "lif1");
  const auto d1 = scratch("report1"), d2 = scratch("report2");
  const auto files = emit_report(c, d1.string());
  emit_report(c, d2.string());
  ASSERT_EQ(files.size(), 3u);
  for (const char* f : {"matrix.csv", "summary.json", "traces.svg"}) {
    ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  const std::string csv = slurp(d1 / "matrix.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "label,lava_dl,norse");
  EXPECT_NE(csv.find("lava_dl,1,1\n"), std::string::npos);
  const json summary = json::parse(slurp(d1 / "summary.json"));
  EXPECT_EQ(summary.at("node"), "lif1");
  EXPECT_EQ(summary.at("labels").size(), 2u);
  EXPECT_NE(slurp(d1 / "traces.svg").find("<svg"), std::string::npos);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(Report, EmptyInputsOnlySummary) {
  const auto d = scratch("report_empty");
  const auto files = emit_report(ComparisonMatrix{}, {}, d.string());
  ASSERT_EQ(files.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(d / "summary.json"));
  std::filesystem::remove_all(d);
}
