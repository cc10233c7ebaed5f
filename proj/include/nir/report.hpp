#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nir/analysis.hpp"
#include "nir/serialize.hpp"

namespace nir {

namespace detail {

inline std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string matrix_csv(const ComparisonMatrix& m) {
  std::string out = "label";
  for (const auto& l : m.labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out += m.labels[i];
    for (double v : m.values[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

// One panel per trace: a membrane line plot of `node` (first element) above
// an event raster of every element.
inline std::string raster_svg(const std::map<std::string, SimulationTrace>& traces, const NodeId& node) {
  constexpr double width = 640.0, left = 120.0, right = 20.0, line_h = 80.0, raster_h = 60.0,
                   gap = 30.0, top = 20.0;
  const double panel_h = line_h + raster_h + gap;
  const double height = top + panel_h * static_cast<double>(traces.size());
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed2(width) +
                    "\" height=\"" + fixed2(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double y0 = top;
  for (const auto& [label, trace] : traces) {
    const auto it = trace.nodes.find(node);
    out += "<text x=\"8.00\" y=\"" + fixed2(y0 + 12.0) + "\">" + xml_escape(label) + "</text>\n";
    if (it == trace.nodes.end() || trace.steps == 0) {
      y0 += panel_h;
      continue;
    }
    const NodeRecord& rec = it->second;
    const double plot_w = width - left - right;
    const double dx = plot_w / static_cast<double>(trace.steps);
    const std::vector<Tensor>& line = rec.v.empty() ? rec.output : rec.v;
    if (!line.empty() && line.front().size() > 0) {
      double lo = 0.0, hi = 0.0;
      for (const auto& x : line) {
        lo = std::min(lo, x[0]);
        hi = std::max(hi, x[0]);
      }
      if (hi == lo) hi = lo + 1.0;
      out += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.20\" points=\"";
      for (std::size_t t = 0; t < line.size(); ++t) {
        const double x = left + dx * (static_cast<double>(t) + 0.5);
        const double y = y0 + line_h - (line[t][0] - lo) / (hi - lo) * line_h;
        out += (t ? " " : "") + fixed2(x) + "," + fixed2(y);
      }
      out += "\"/>\n";
    }
    const double ry = y0 + line_h + 4.0;
    out += "<rect x=\"" + fixed2(left) + "\" y=\"" + fixed2(ry) + "\" width=\"" + fixed2(plot_w) +
           "\" height=\"" + fixed2(raster_h) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    const std::size_t n = rec.output.empty() ? 0 : rec.output.front().size();
    const double row = n ? raster_h / static_cast<double>(n) : raster_h;
    for (std::size_t t = 0; t < rec.output.size(); ++t) {
      for (std::size_t k = 0; k < n; ++k) {
        if (rec.output[t][k] == 0.0) continue;
        const double x = left + dx * (static_cast<double>(t) + 0.5);
        out += "<line x1=\"" + fixed2(x) + "\" x2=\"" + fixed2(x) + "\" y1=\"" +
               fixed2(ry + row * static_cast<double>(k)) + "\" y2=\"" +
               fixed2(ry + row * static_cast<double>(k + 1)) + "\" stroke=\"black\"/>\n";
      }
    }
    y0 += panel_h;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace detail

// Writes matrix.csv (when the matrix has labels), summary.json (always) and
// traces.svg (when traces are given) into `dir`. Returns the written paths.
inline std::vector<std::string> emit_report(const ComparisonMatrix& matrix,
                                            const std::map<std::string, SimulationTrace>& traces,
                                            const std::string& dir, const NodeId& node = {},
                                            const std::vector<PairComparison>& pairs = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path root(dir);
  std::vector<std::string> written;
  if (!matrix.labels.empty()) {
    const auto p = (root / "matrix.csv").string();
    write_text_file(p, detail::matrix_csv(matrix));
    written.push_back(p);
  }

  json summary;
  summary["node"] = node;
  summary["labels"] = matrix.labels;
  summary["matrix"] = matrix.values;
  summary["pairs"] = json::array();
  for (const auto& pc : pairs) {
    json j;
    j["a"] = pc.a;
    j["b"] = pc.b;
    j["count_a"] = pc.result.count_a;
    j["count_b"] = pc.result.count_b;
    j["best_shift"] = pc.result.best_shift;
    j["exact_match_at_shift"] = pc.result.exact_match_at_shift;
    j["overlap"] = pc.result.overlap;
    summary["pairs"].push_back(std::move(j));
  }
  summary["spike_counts"] = json::object();
  for (const auto& [label, trace] : traces) {
    const auto it = trace.nodes.find(node);
    if (it == trace.nodes.end()) continue;
    double count = 0.0;
    for (const auto& x : it->second.output)
      for (double e : x.values()) count += e;
    summary["spike_counts"][label] = count;
  }
  const auto sp = (root / "summary.json").string();
  write_text_file(sp, canonical_json(summary));
  written.push_back(sp);

  if (!traces.empty()) {
    const auto p = (root / "traces.svg").string();
    write_text_file(p, detail::raster_svg(traces, node));
    written.push_back(p);
  }
  return written;
}

inline std::vector<std::string> emit_report(const DialectComparison& c, const std::string& dir) {
  return emit_report(c.matrix, c.traces, dir, c.node, c.pairs);
}

}  // namespace nir
