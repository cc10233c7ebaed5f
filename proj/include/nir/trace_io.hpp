#pragma once

#include <charconv>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nir/engine.hpp"
#include "nir/serialize.hpp"

namespace nir {

// CSV layout: one header row, one row per timestep. Input columns are named
// "<input node>.output[<flat index>]"; trace columns add ".v[...]" and ".u[...]"
// state series after each node's output columns.

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

inline double parse_number(const std::string& cell, std::size_t line, std::size_t column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty())
    fail(ErrorCode::parse_error, "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": not a number '" + cell + "'");
  return value;
}

inline void flatten_numbers(const json& j, std::vector<double>& out, const std::string& where) {
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& x : j) flatten_numbers(x, out, where);
  } else {
    fail(ErrorCode::parse_error, "at " + where + ": expected numbers");
  }
}

inline Shape input_shape(const Graph& g, const NodeId& id) {
  const Node& node = g.node(id);
  if (node.kind() != Kind::input) fail(ErrorCode::invalid_argument, "'" + id + "' is not an input node");
  return node.ports().outputs.front().shape;
}

}  // namespace detail

inline InputStream zero_inputs(const Graph& g, std::size_t steps) {
  InputStream in;
  in.steps = steps;
  for (const auto& id : g.nodes_of_kind(Kind::input))
    in.series[id] = std::vector<Tensor>(steps, Tensor::zeros(detail::input_shape(g, id)));
  return in;
}

// Every element of every Input node needs a column.
inline InputStream read_input_csv(const Graph& g, std::string_view text) {
  static const std::regex column(R"(^(.+)\.([A-Za-z_]+)\[(\d+)\]$)");
  std::istringstream ss{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<NodeId, std::size_t>> columns;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (!have_header) {
      have_header = true;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        std::smatch m;
        if (!std::regex_match(cells[c], m, column) || m[2] != "output")
          fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ", column " +
                                           std::to_string(c + 1) + ": bad column name '" +
                                           cells[c] + "' (expected node.output[index])");
        columns.emplace_back(m[1], std::stoul(m[3]));
      }
      continue;
    }
    if (cells.size() != columns.size())
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(columns.size()) + " cells, got " +
                                       std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(detail::parse_number(cells[c], line_no, c + 1));
    rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCode::parse_error, "input CSV has no header row");

  InputStream in = zero_inputs(g, rows.size());
  std::map<NodeId, std::vector<bool>> covered;
  for (const auto& [id, series] : in.series)
    covered[id].assign(detail::input_shape(g, id).numel(), false);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& [id, flat] = columns[c];
    auto it = covered.find(id);
    if (it == covered.end())
      fail(ErrorCode::invalid_argument, "column '" + id + "' does not name an input node");
    if (flat >= it->second.size())
      fail(ErrorCode::shape_mismatch, "column index " + std::to_string(flat) + " out of range for '" +
                                          id + "'");
    if (it->second[flat]) fail(ErrorCode::parse_error, "duplicate column for " + id);
    it->second[flat] = true;
    for (std::size_t t = 0; t < rows.size(); ++t) in.series[id][t][flat] = rows[t][c];
  }
  for (const auto& [id, flags] : covered)
    for (std::size_t k = 0; k < flags.size(); ++k)
      if (!flags[k])
        fail(ErrorCode::invalid_argument,
             "missing column " + id + ".output[" + std::to_string(k) + "]");
  return in;
}

// {"steps": T, "nodes": {"<input>": [[...], ...]}}; rows may be nested to the
// node's shape or flat.
inline InputStream read_input_json(const Graph& g, const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_object())
    fail(ErrorCode::parse_error, "at /nodes: input document needs a 'nodes' object");
  std::size_t steps = 0;
  bool have_steps = false;
  if (j.contains("steps")) {
    if (!j.at("steps").is_number_unsigned()) fail(ErrorCode::parse_error, "at /steps: expected integer");
    steps = j.at("steps").get<std::size_t>();
    have_steps = true;
  }
  InputStream in;
  for (auto it = j.at("nodes").begin(); it != j.at("nodes").end(); ++it) {
    const Shape shape = detail::input_shape(g, it.key());
    const std::string where = "/nodes/" + it.key();
    if (!it.value().is_array()) fail(ErrorCode::parse_error, "at " + where + ": expected array of rows");
    std::vector<Tensor> series;
    for (std::size_t t = 0; t < it.value().size(); ++t) {
      std::vector<double> flat;
      detail::flatten_numbers(it.value()[t], flat, where + "/" + std::to_string(t));
      if (flat.size() != shape.numel())
        fail(ErrorCode::shape_mismatch, "at " + where + "/" + std::to_string(t) + ": expected " +
                                            std::to_string(shape.numel()) + " values");
      series.emplace_back(shape, std::move(flat));
    }
    if (!have_steps) {
      steps = series.size();
      have_steps = true;
    }
    if (series.size() != steps)
      fail(ErrorCode::length_mismatch, "input '" + it.key() + "' has " +
                                           std::to_string(series.size()) + " rows, expected " +
                                           std::to_string(steps));
    in.series[it.key()] = std::move(series);
  }
  in.steps = steps;
  for (const auto& id : g.nodes_of_kind(Kind::input))
    if (!in.series.count(id)) fail(ErrorCode::invalid_argument, "no input rows for '" + id + "'");
  return in;
}

inline InputStream load_inputs(const Graph& g, const std::string& path) {
  const std::string text = read_text_file(path);
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return is_json ? read_input_json(g, parse_json_text(text)) : read_input_csv(g, text);
}

inline std::string inputs_to_csv(const InputStream& in) {
  std::string out;
  bool first = true;
  for (const auto& [id, series] : in.series) {
    const std::size_t numel = series.empty() ? 0 : series.front().size();
    for (std::size_t k = 0; k < numel; ++k) {
      if (!first) out += ",";
      first = false;
      out += id + ".output[" + std::to_string(k) + "]";
    }
  }
  out += "\n";
  for (std::size_t t = 0; t < in.steps; ++t) {
    first = true;
    for (const auto& [id, series] : in.series) {
      for (double x : series[t].values()) {
        if (!first) out += ",";
        first = false;
        out += format_double(x);
      }
    }
    out += "\n";
  }
  return out;
}

inline std::string trace_to_csv(const SimulationTrace& trace) {
  std::string out = "step";
  struct Column {
    const std::vector<Tensor>* series;
    std::size_t index;
  };
  std::vector<Column> columns;
  auto add = [&](const NodeId& id, const char* port, const std::vector<Tensor>& series) {
    if (series.empty()) return;
    for (std::size_t k = 0; k < series.front().size(); ++k) {
      out += "," + id + "." + port + "[" + std::to_string(k) + "]";
      columns.push_back({&series, k});
    }
  };
  for (const auto& [id, rec] : trace.nodes) {
    add(id, "output", rec.output);
    add(id, "v", rec.v);
    add(id, "u", rec.u);
  }
  out += "\n";
  for (std::size_t t = 0; t < trace.steps; ++t) {
    out += std::to_string(t);
    for (const auto& c : columns) out += "," + format_double((*c.series)[t][c.index]);
    out += "\n";
  }
  return out;
}

inline json trace_to_json(const SimulationTrace& trace) {
  json j;
  j["dialect"] = trace.dialect;
  j["dt"] = trace.dt;
  j["steps"] = trace.steps;
  j["nodes"] = json::object();
  auto rows = [](const std::vector<Tensor>& series) {
    json arr = json::array();
    for (const auto& x : series) arr.push_back(json(x.data()));
    return arr;
  };
  for (const auto& [id, rec] : trace.nodes) {
    json node;
    node["output"] = rows(rec.output);
    if (!rec.v.empty()) node["v"] = rows(rec.v);
    if (!rec.u.empty()) node["u"] = rows(rec.u);
    j["nodes"][id] = std::move(node);
  }
  j["overflow"] = json::object();
  for (const auto& [id, n] : trace.overflow) j["overflow"][id] = n;
  return j;
}

// Element-0-major event series of one recorded node: events[t][k].
inline std::vector<std::vector<double>> event_matrix(const SimulationTrace& trace, const NodeId& id) {
  auto it = trace.nodes.find(id);
  if (it == trace.nodes.end()) fail(ErrorCode::unknown_node, "node '" + id + "' was not recorded");
  std::vector<std::vector<double>> out;
  for (const auto& x : it->second.output) out.emplace_back(x.data());
  return out;
}

}  // namespace nir
