#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "nir/graph.hpp"

namespace nir {

struct QuantizedTensor {
  NodeId node;
  std::string param;
  double scale = 1.0;
  Shape shape;
  std::vector<std::int64_t> ints;

  Tensor dequantized() const {
    std::vector<double> out(ints.size());
    for (std::size_t k = 0; k < ints.size(); ++k) out[k] = static_cast<double>(ints[k]) * scale;
    return Tensor(shape, std::move(out));
  }
};

inline std::int64_t quant_max(int bits) { return (std::int64_t{1} << (bits - 1)) - 1; }

// Symmetric per-tensor: scale = max|w| / qmax, q = round-half-even(w / scale)
// evaluated as w·qmax / max|w| so exact halves stay exact. An all-zero tensor
// gets scale 1.
inline QuantizedTensor quantize_tensor(const Tensor& w, int bits) {
  if (bits < 2 || bits > 32) fail(ErrorCode::invalid_argument, "weight_bits must lie in [2, 32]");
  const std::int64_t qmax = quant_max(bits);
  double maxabs = 0.0;
  for (double x : w.values()) maxabs = std::max(maxabs, std::abs(x));
  QuantizedTensor q;
  q.shape = w.shape();
  q.ints.assign(w.size(), 0);
  if (maxabs == 0.0) return q;
  q.scale = maxabs / static_cast<double>(qmax);
  const double qm = static_cast<double>(qmax);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double r = std::nearbyint(w[k] * qm / maxabs);
    q.ints[k] = static_cast<std::int64_t>(std::clamp(r, -qm, qm));
  }
  return q;
}

struct QuantizationResult {
  Graph graph;  // weights replaced by their dequantized values
  std::vector<QuantizedTensor> tensors;
};

// Quantizes every affine, linear and conv weight. Biases stay in float; the
// per-tensor scales are recorded as metadata "quant.<node>.weight.scale".
inline QuantizationResult quantize(const Graph& g, int bits) {
  if (bits < 2 || bits > 32) fail(ErrorCode::invalid_argument, "weight_bits must lie in [2, 32]");
  GraphBuilder b(g);
  QuantizationResult out;
  b.set_metadata("quant.weight_bits", std::to_string(bits));
  for (const auto& [id, node] : g.nodes()) {
    const Tensor* w = nullptr;
    if (const auto* p = std::get_if<AffineParams>(&node.params)) w = &p->weight;
    if (const auto* p = std::get_if<LinearParams>(&node.params)) w = &p->weight;
    if (const auto* p = std::get_if<ConvParams>(&node.params)) w = &p->weight;
    if (!w) continue;
    QuantizedTensor q = quantize_tensor(*w, bits);
    q.node = id;
    q.param = "weight";
    PrimitiveParams params = node.params;
    std::visit(overloaded{
                   [&](AffineParams& p) { p.weight = q.dequantized(); },
                   [&](LinearParams& p) { p.weight = q.dequantized(); },
                   [&](ConvParams& p) { p.weight = q.dequantized(); },
                   [](auto&) {},
               },
               params);
    b.set_params(id, std::move(params));
    b.set_metadata("quant." + id + ".weight.scale", format_double(q.scale));
    out.tensors.push_back(std::move(q));
  }
  out.graph = std::move(b).build();
  return out;
}

}  // namespace nir
