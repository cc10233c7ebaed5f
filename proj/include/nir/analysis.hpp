#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nir/engine.hpp"
#include "nir/trace_io.hpp"

namespace nir {

// S_c = (r1 · r2) / (|r1| |r2|). Two silent vectors are identical (1); one
// silent vector against an active one scores 0.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorCode::length_mismatch, "rate vectors have lengths " + std::to_string(a.size()) +
                                         " and " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Time-averaged events per step for each element, skipping the first
// `burn_in` steps.
inline std::vector<double> rate_vector(const std::vector<Tensor>& events, std::size_t burn_in = 0) {
  if (events.empty()) return {};
  std::vector<double> rate(events.front().size(), 0.0);
  if (burn_in >= events.size()) return rate;
  for (std::size_t t = burn_in; t < events.size(); ++t)
    for (std::size_t k = 0; k < rate.size(); ++k) rate[k] += events[t][k];
  const double window = static_cast<double>(events.size() - burn_in);
  for (auto& r : rate) r /= window;
  return rate;
}

struct SpikeTrainComparison {
  double count_a = 0.0;
  double count_b = 0.0;
  int best_shift = 0;
  bool exact_match_at_shift = false;
  double overlap = 0.0;  // coincident events at best_shift
};

// Finds k in [-window, window] aligning b[t] with a[t - k] (zero fill). An
// exact alignment wins, smallest |k| first and positive before negative;
// otherwise the shift with the largest overlap.
inline SpikeTrainComparison spike_train_compare(const std::vector<Tensor>& a,
                                                const std::vector<Tensor>& b, int window = 5) {
  if (a.size() != b.size())
    fail(ErrorCode::length_mismatch, "event series have " + std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()) + " steps");
  const auto T = static_cast<long>(a.size());
  SpikeTrainComparison out;
  for (long t = 0; t < T; ++t) {
    if (a[t].shape() != b[t].shape())
      fail(ErrorCode::shape_mismatch, "event series differ in shape at step " + std::to_string(t));
    for (double x : a[t].values()) out.count_a += x;
    for (double x : b[t].values()) out.count_b += x;
  }
  std::vector<int> shifts{0};
  for (int k = 1; k <= window; ++k) {
    shifts.push_back(k);
    shifts.push_back(-k);
  }
  bool have_best = false;
  double best_overlap = -1.0;
  int best_shift = 0;
  for (int k : shifts) {
    bool exact = true;
    double overlap = 0.0;
    for (long t = 0; t < T; ++t) {
      const long src = t - k;
      for (std::size_t e = 0; e < b[t].size(); ++e) {
        const double shifted = (src >= 0 && src < T) ? a[src][e] : 0.0;
        if (shifted != b[t][e]) exact = false;
        overlap += std::min(shifted, b[t][e]);
      }
    }
    if (exact) {
      out.best_shift = k;
      out.exact_match_at_shift = true;
      out.overlap = overlap;
      return out;
    }
    if (!have_best || overlap > best_overlap) {
      have_best = true;
      best_overlap = overlap;
      best_shift = k;
    }
  }
  out.best_shift = best_shift;
  out.overlap = best_overlap;
  return out;
}

struct ComparisonMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
};

struct PairComparison {
  std::string a, b;
  SpikeTrainComparison result;
};

struct DialectComparison {
  ComparisonMatrix matrix;
  std::vector<PairComparison> pairs;        // i < j in label order
  std::map<std::string, std::vector<double>> rates;
  std::map<std::string, SimulationTrace> traces;
  NodeId node;
};

struct CompareOptions {
  std::size_t burn_in = 0;
  int shift_window = 5;
  bool parallel = true;
};

// Runs the graph once per config (labelled by config name), then compares
// rates and event trains of `node`. Results are ordered by label.
inline DialectComparison compare_dialects(const Graph& g, const InputStream& inputs,
                                          std::vector<DialectConfig> configs, const NodeId& node,
                                          const CompareOptions& opts = {}) {
  g.node(node);
  std::sort(configs.begin(), configs.end(),
            [](const DialectConfig& x, const DialectConfig& y) { return x.name < y.name; });
  for (std::size_t i = 1; i < configs.size(); ++i)
    if (configs[i].name == configs[i - 1].name)
      fail(ErrorCode::invalid_argument, "duplicate dialect label '" + configs[i].name + "'");

  DialectComparison out;
  out.node = node;
  std::vector<SimulationTrace> traces(configs.size());
  if (opts.parallel && configs.size() > 1) {
    std::vector<std::future<SimulationTrace>> jobs;
    for (const auto& cfg : configs)
      jobs.push_back(std::async(std::launch::async, [&g, &inputs, cfg, node] {
        return run(g, cfg, inputs, {node});
      }));
    for (std::size_t i = 0; i < jobs.size(); ++i) traces[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < configs.size(); ++i) traces[i] = run(g, configs[i], inputs, {node});
  }

  const std::size_t n = configs.size();
  out.matrix.values.assign(n, std::vector<double>(n, 0.0));
  std::vector<const std::vector<Tensor>*> events(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.matrix.labels.push_back(configs[i].name);
    events[i] = &traces[i].nodes.at(node).output;
    out.rates[configs[i].name] = rate_vector(*events[i], opts.burn_in);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double s = cosine_similarity(out.rates[configs[i].name], out.rates[configs[j].name]);
      out.matrix.values[i][j] = s;
      out.matrix.values[j][i] = s;
      if (i != j)
        out.pairs.push_back({configs[i].name, configs[j].name,
                             spike_train_compare(*events[i], *events[j], opts.shift_window)});
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.traces.emplace(configs[i].name, std::move(traces[i]));
  return out;
}

}  // namespace nir
