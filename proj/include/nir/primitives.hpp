#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nir/error.hpp"
#include "nir/tensor.hpp"

namespace nir {

// ---------------------------------------------------------------------------
// Parameter bundles, one per primitive kind.
//
// Per-element parameters are full tensors; a node's element-wise tensors all
// share one shape. Reset discretization (hard / subtractive, theta_reset) is a
// property of the dialect, not of the declared continuous dynamics.
// ---------------------------------------------------------------------------

struct InputParams {
  Shape shape;
  friend bool operator==(const InputParams&, const InputParams&) = default;
};

struct OutputParams {
  Shape shape;
  friend bool operator==(const OutputParams&, const OutputParams&) = default;
};

// W·i + b with W of shape [out, in].
struct AffineParams {
  Tensor weight;
  Tensor bias;
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

// W·i with W of shape [out, in].
struct LinearParams {
  Tensor weight;
  friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

// Element-wise s ⊙ i.
struct ScaleParams {
  Tensor scale;
  friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

// N-d cross-correlation. input_shape is [C_in, spatial...]; weight is
// [C_out, C_in / groups, kernel...]; bias is [C_out].
struct ConvParams {
  Shape input_shape;
  Tensor weight;
  std::vector<std::size_t> stride;
  std::vector<std::size_t> padding;
  std::vector<std::size_t> dilation;
  std::size_t groups = 1;
  Tensor bias;
  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

// i(t - delay), delay in seconds per element.
struct DelayParams {
  Tensor delay;
  friend bool operator==(const DelayParams&, const DelayParams&) = default;
};

struct FlattenParams {
  Shape input_shape;
  std::size_t start_dim = 0;
  std::size_t end_dim = 0;
  friend bool operator==(const FlattenParams&, const FlattenParams&) = default;
};

// dv/dt = R·i
struct IntegratorParams {
  Tensor r;
  friend bool operator==(const IntegratorParams&, const IntegratorParams&) = default;
};

// tau·dv/dt = (v_leak - v) + R·i
struct LeakyIntegratorParams {
  Tensor tau;
  Tensor r;
  Tensor v_leak;
  friend bool operator==(const LeakyIntegratorParams&, const LeakyIntegratorParams&) = default;
};

// Emits an event where i >= threshold.
struct SpikeParams {
  Tensor threshold;
  friend bool operator==(const SpikeParams&, const SpikeParams&) = default;
};

struct IfParams {
  Tensor r;
  Tensor threshold;
  friend bool operator==(const IfParams&, const IfParams&) = default;
};

struct LifParams {
  Tensor tau;
  Tensor r;
  Tensor v_leak;
  Tensor threshold;
  friend bool operator==(const LifParams&, const LifParams&) = default;
};

// tau_syn·du/dt = -u + w_in·i ; tau_mem·dv/dt = (v_leak - v) + R·u
struct CubaLifParams {
  Tensor tau_syn;
  Tensor tau_mem;
  Tensor r;
  Tensor v_leak;
  Tensor w_in;
  Tensor threshold;
  friend bool operator==(const CubaLifParams&, const CubaLifParams&) = default;
};

using PrimitiveParams =
    std::variant<InputParams, OutputParams, AffineParams, LinearParams, ScaleParams,
                 ConvParams, DelayParams, FlattenParams, IntegratorParams,
                 LeakyIntegratorParams, SpikeParams, IfParams, LifParams, CubaLifParams>;

enum class Kind {
  input,
  output,
  affine,
  linear,
  scale,
  conv,
  delay,
  flatten,
  integrator,
  li,
  spike,
  if_,
  lif,
  cuba_lif,
};

inline constexpr std::array<Kind, 14> all_kinds{
    Kind::input, Kind::output,     Kind::affine, Kind::linear, Kind::scale,
    Kind::conv,  Kind::delay,      Kind::flatten, Kind::integrator, Kind::li,
    Kind::spike, Kind::if_,        Kind::lif,    Kind::cuba_lif};

// Serialized kind names.
constexpr std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::input: return "input";
    case Kind::output: return "output";
    case Kind::affine: return "affine";
    case Kind::linear: return "linear";
    case Kind::scale: return "scale";
    case Kind::conv: return "conv";
    case Kind::delay: return "delay";
    case Kind::flatten: return "flatten";
    case Kind::integrator: return "integrator";
    case Kind::li: return "li";
    case Kind::spike: return "spike";
    case Kind::if_: return "if";
    case Kind::lif: return "lif";
    case Kind::cuba_lif: return "cuba_lif";
  }
  return "?";
}

inline std::optional<Kind> kind_from_name(std::string_view name) {
  for (Kind k : all_kinds) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

inline Kind kind_of(const PrimitiveParams& params) {
  // Variant alternatives are declared in Kind order.
  return static_cast<Kind>(params.index());
}

// Kinds carrying integration state between timesteps.
constexpr bool is_stateful(Kind k) {
  return k == Kind::integrator || k == Kind::li || k == Kind::if_ || k == Kind::lif ||
         k == Kind::cuba_lif;
}

// Kinds that emit threshold events.
constexpr bool is_spiking(Kind k) {
  return k == Kind::spike || k == Kind::if_ || k == Kind::lif || k == Kind::cuba_lif;
}

// Higher-order primitives defined as compositions.
constexpr bool is_higher_order(Kind k) {
  return k == Kind::if_ || k == Kind::lif || k == Kind::cuba_lif;
}

// Nodes that break a cycle in discrete time.
constexpr bool breaks_cycles(Kind k) { return is_stateful(k) || k == Kind::delay; }

// ---------------------------------------------------------------------------
// Ports
// ---------------------------------------------------------------------------

enum class PortDirection { input, output };

struct Port {
  std::string name;
  Shape shape;
  PortDirection direction = PortDirection::input;
  friend bool operator==(const Port&, const Port&) = default;
};

struct PortSignature {
  std::vector<Port> inputs;
  std::vector<Port> outputs;

  const Port* find_input(std::string_view name) const {
    for (const auto& p : inputs)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Port* find_output(std::string_view name) const {
    for (const auto& p : outputs)
      if (p.name == name) return &p;
    return nullptr;
  }
};

inline constexpr std::string_view kInputPort = "input";
inline constexpr std::string_view kResetPort = "reset";
inline constexpr std::string_view kOutputPort = "output";

// Output extent of a convolution; an unresolved input shape yields an
// unresolved output shape.
inline Shape conv_output_shape(const ConvParams& p) {
  if (!p.input_shape.resolved() || p.weight.shape().rank() < 2) return {};
  const std::size_t spatial = p.weight.shape().rank() - 2;
  if (p.input_shape.rank() != spatial + 1) return {};
  std::vector<std::size_t> dims{p.weight.shape()[0]};
  for (std::size_t d = 0; d < spatial; ++d) {
    const std::size_t stride = d < p.stride.size() ? p.stride[d] : 1;
    const std::size_t pad = d < p.padding.size() ? p.padding[d] : 0;
    const std::size_t dil = d < p.dilation.size() ? p.dilation[d] : 1;
    const std::size_t k = p.weight.shape()[d + 2];
    const std::size_t padded = p.input_shape[d + 1] + 2 * pad;
    const std::size_t span = dil * (k - 1) + 1;
    if (stride == 0 || padded < span) return {};
    dims.push_back((padded - span) / stride + 1);
  }
  return Shape(std::move(dims));
}

inline Shape flatten_output_shape(const FlattenParams& p) {
  const auto& in = p.input_shape;
  if (!in.resolved() || p.start_dim > p.end_dim || p.end_dim >= in.rank()) return {};
  std::vector<std::size_t> dims(in.dims().begin(), in.dims().begin() + p.start_dim);
  std::size_t collapsed = 1;
  for (std::size_t d = p.start_dim; d <= p.end_dim; ++d) collapsed *= in[d];
  dims.push_back(collapsed);
  dims.insert(dims.end(), in.dims().begin() + p.end_dim + 1, in.dims().end());
  return Shape(std::move(dims));
}

namespace detail {

inline Shape matrix_in(const Tensor& w) {
  return w.shape().rank() == 2 ? Shape{w.shape()[1]} : Shape{};
}
inline Shape matrix_out(const Tensor& w) {
  return w.shape().rank() == 2 ? Shape{w.shape()[0]} : Shape{};
}

inline PortSignature unary(Shape in, Shape out) {
  return {{Port{std::string(kInputPort), std::move(in), PortDirection::input}},
          {Port{std::string(kOutputPort), std::move(out), PortDirection::output}}};
}

inline PortSignature neuron(const Shape& shape) {
  return {{Port{std::string(kInputPort), shape, PortDirection::input},
           Port{std::string(kResetPort), shape, PortDirection::input}},
          {Port{std::string(kOutputPort), shape, PortDirection::output}}};
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace detail

using detail::overloaded;

// Ports are a pure function of the parameters.
inline PortSignature port_signature(const PrimitiveParams& params) {
  using namespace detail;
  return std::visit(
      overloaded{
          [](const InputParams& p) {
            return PortSignature{
                {}, {Port{std::string(kOutputPort), p.shape, PortDirection::output}}};
          },
          [](const OutputParams& p) {
            return PortSignature{
                {Port{std::string(kInputPort), p.shape, PortDirection::input}}, {}};
          },
          [](const AffineParams& p) { return unary(matrix_in(p.weight), matrix_out(p.weight)); },
          [](const LinearParams& p) { return unary(matrix_in(p.weight), matrix_out(p.weight)); },
          [](const ScaleParams& p) { return unary(p.scale.shape(), p.scale.shape()); },
          [](const ConvParams& p) { return unary(p.input_shape, conv_output_shape(p)); },
          [](const DelayParams& p) { return unary(p.delay.shape(), p.delay.shape()); },
          [](const FlattenParams& p) { return unary(p.input_shape, flatten_output_shape(p)); },
          [](const IntegratorParams& p) { return neuron(p.r.shape()); },
          [](const LeakyIntegratorParams& p) { return neuron(p.tau.shape()); },
          [](const SpikeParams& p) { return unary(p.threshold.shape(), p.threshold.shape()); },
          [](const IfParams& p) { return neuron(p.threshold.shape()); },
          [](const LifParams& p) { return neuron(p.tau.shape()); },
          [](const CubaLifParams& p) { return neuron(p.tau_mem.shape()); },
      },
      params);
}

// Human-readable parameter problems; empty when the bundle is well formed.
inline std::vector<std::string> parameter_problems(const PrimitiveParams& params) {
  std::vector<std::string> out;
  auto same_shape = [&](std::initializer_list<std::pair<const char*, const Tensor*>> ts) {
    const Shape& ref = ts.begin()->second->shape();
    if (!ref.well_formed()) {
      out.push_back(std::string(ts.begin()->first) + " has malformed shape " + ref.to_string());
      return;
    }
    for (const auto& [name, t] : ts) {
      if (t->shape() != ref) {
        out.push_back(std::string(name) + " shape " + t->shape().to_string() +
                      " differs from " + ref.to_string());
      }
    }
  };
  auto positive = [&](const char* name, const Tensor& t) {
    if (!all_of(t, [](double x) { return x > 0.0 && std::isfinite(x); }))
      out.push_back(std::string(name) + " must be strictly positive and finite");
  };
  auto finite = [&](const char* name, const Tensor& t) {
    if (!all_of(t, [](double x) { return std::isfinite(x); }))
      out.push_back(std::string(name) + " must be finite");
  };
  auto matrix = [&](const Tensor& w) {
    if (w.shape().rank() != 2 || !w.shape().well_formed())
      out.push_back("weight must be a non-empty [out, in] matrix, got " + w.shape().to_string());
    finite("weight", w);
  };

  std::visit(
      overloaded{
          [&](const InputParams& p) {
            if (!p.shape.well_formed()) out.push_back("shape must be non-empty with extents >= 1");
          },
          [&](const OutputParams& p) {
            if (!p.shape.well_formed()) out.push_back("shape must be non-empty with extents >= 1");
          },
          [&](const AffineParams& p) {
            matrix(p.weight);
            if (p.weight.shape().rank() == 2 && p.bias.shape() != Shape{p.weight.shape()[0]})
              out.push_back("bias shape " + p.bias.shape().to_string() +
                            " does not match output " + Shape{p.weight.shape()[0]}.to_string());
            finite("bias", p.bias);
          },
          [&](const LinearParams& p) { matrix(p.weight); },
          [&](const ScaleParams& p) {
            same_shape({{"scale", &p.scale}});
            finite("scale", p.scale);
          },
          [&](const ConvParams& p) {
            const auto& ws = p.weight.shape();
            if (ws.rank() < 3 || !ws.well_formed()) {
              out.push_back("weight must be [C_out, C_in/groups, kernel...], got " + ws.to_string());
              return;
            }
            const std::size_t spatial = ws.rank() - 2;
            for (const auto* v : {&p.stride, &p.dilation}) {
              if (v->size() != spatial ||
                  std::any_of(v->begin(), v->end(), [](std::size_t x) { return x == 0; }))
                out.push_back("stride and dilation need one positive entry per spatial axis");
            }
            if (p.padding.size() != spatial)
              out.push_back("padding needs one entry per spatial axis");
            if (p.groups == 0 || ws[0] % p.groups != 0)
              out.push_back("groups must be positive and divide C_out");
            if (p.bias.shape() != Shape{ws[0]})
              out.push_back("bias shape must be [C_out]");
            if (p.input_shape.resolved()) {
              if (p.input_shape.rank() != spatial + 1 || !p.input_shape.well_formed())
                out.push_back("input_shape must be [C_in, spatial...]");
              else if (ws[1] * p.groups != p.input_shape[0])
                out.push_back("C_in/groups * groups must equal input channels");
              else if (!conv_output_shape(p).resolved())
                out.push_back("kernel does not fit the padded input");
            }
            finite("weight", p.weight);
            finite("bias", p.bias);
          },
          [&](const DelayParams& p) {
            same_shape({{"delay", &p.delay}});
            if (!all_of(p.delay, [](double x) { return x >= 0.0 && std::isfinite(x); }))
              out.push_back("delay must be non-negative and finite");
          },
          [&](const FlattenParams& p) {
            if (p.input_shape.resolved()) {
              if (!p.input_shape.well_formed()) out.push_back("input_shape malformed");
              if (p.start_dim > p.end_dim || p.end_dim >= p.input_shape.rank())
                out.push_back("flatten requires start_dim <= end_dim < rank");
            } else if (p.start_dim > p.end_dim) {
              out.push_back("flatten requires start_dim <= end_dim");
            }
          },
          [&](const IntegratorParams& p) {
            same_shape({{"r", &p.r}});
            finite("r", p.r);
          },
          [&](const LeakyIntegratorParams& p) {
            same_shape({{"tau", &p.tau}, {"r", &p.r}, {"v_leak", &p.v_leak}});
            positive("tau", p.tau);
            finite("r", p.r);
            finite("v_leak", p.v_leak);
          },
          [&](const SpikeParams& p) {
            same_shape({{"threshold", &p.threshold}});
            finite("threshold", p.threshold);
          },
          [&](const IfParams& p) {
            same_shape({{"threshold", &p.threshold}, {"r", &p.r}});
            finite("r", p.r);
            finite("threshold", p.threshold);
          },
          [&](const LifParams& p) {
            same_shape({{"tau", &p.tau}, {"r", &p.r}, {"v_leak", &p.v_leak},
                        {"threshold", &p.threshold}});
            positive("tau", p.tau);
            finite("r", p.r);
            finite("v_leak", p.v_leak);
            finite("threshold", p.threshold);
          },
          [&](const CubaLifParams& p) {
            same_shape({{"tau_mem", &p.tau_mem},
                        {"tau_syn", &p.tau_syn},
                        {"r", &p.r},
                        {"v_leak", &p.v_leak},
                        {"w_in", &p.w_in},
                        {"threshold", &p.threshold}});
            positive("tau_syn", p.tau_syn);
            positive("tau_mem", p.tau_mem);
            finite("r", p.r);
            finite("v_leak", p.v_leak);
            finite("w_in", p.w_in);
            finite("threshold", p.threshold);
          },
      },
      params);
  return out;
}

// ---------------------------------------------------------------------------
// Continuous-time right-hand sides
// ---------------------------------------------------------------------------

// Membrane state v; synaptic current u is only populated for cuba_lif.
struct NeuronState {
  Tensor v;
  Tensor u;
};

struct StateDerivative {
  Tensor dv;
  Tensor du;
};

inline StateDerivative continuous_rhs(const PrimitiveParams& params, const NeuronState& state,
                                      const Tensor& input) {
  auto check = [](const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
      fail(ErrorCode::shape_mismatch, std::string(what) + " shape " + b.shape().to_string() +
                                          " does not match " + a.shape().to_string());
  };
  auto integrate = [&](const Tensor& r) {
    check(r, state.v, "state");
    check(r, input, "input");
    Tensor dv = Tensor::zeros(r.shape());
    for (std::size_t k = 0; k < dv.size(); ++k) dv[k] = r[k] * input[k];
    return StateDerivative{std::move(dv), {}};
  };
  auto leaky = [&](const Tensor& tau, const Tensor& r, const Tensor& v_leak) {
    check(tau, state.v, "state");
    check(tau, input, "input");
    Tensor dv = Tensor::zeros(tau.shape());
    for (std::size_t k = 0; k < dv.size(); ++k)
      dv[k] = ((v_leak[k] - state.v[k]) + r[k] * input[k]) / tau[k];
    return StateDerivative{std::move(dv), {}};
  };
  return std::visit(
      overloaded{
          [&](const IntegratorParams& p) { return integrate(p.r); },
          [&](const IfParams& p) { return integrate(p.r); },
          [&](const LeakyIntegratorParams& p) { return leaky(p.tau, p.r, p.v_leak); },
          [&](const LifParams& p) { return leaky(p.tau, p.r, p.v_leak); },
          [&](const CubaLifParams& p) {
            check(p.tau_mem, state.v, "state v");
            check(p.tau_mem, state.u, "state u");
            check(p.tau_mem, input, "input");
            Tensor du = Tensor::zeros(p.tau_mem.shape());
            Tensor dv = Tensor::zeros(p.tau_mem.shape());
            for (std::size_t k = 0; k < du.size(); ++k) {
              du[k] = (-state.u[k] + p.w_in[k] * input[k]) / p.tau_syn[k];
              dv[k] = ((p.v_leak[k] - state.v[k]) + p.r[k] * state.u[k]) / p.tau_mem[k];
            }
            return StateDerivative{std::move(dv), std::move(du)};
          },
          [&](const auto&) -> StateDerivative {
            fail(ErrorCode::non_ode_kind, std::string(kind_name(kind_of(params))) +
                                              " has no continuous dynamics");
          },
      },
      params);
}

// ---------------------------------------------------------------------------
// Stateless evaluation
// ---------------------------------------------------------------------------

namespace detail {

// out[i] = (sum_j W[i,j]·x[j]) + bias[i]; a missing bias adds +0.0 so that
// Linear and zero-bias Affine share one operation sequence.
inline Tensor matvec(const Tensor& w, const Tensor& x, const Tensor* bias) {
  const std::size_t rows = w.shape()[0];
  const std::size_t cols = w.shape()[1];
  std::vector<double> out(rows);
  const auto wv = w.values();
  const auto xv = x.values();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = wv.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xv[j];
    out[i] = acc + (bias ? (*bias)[i] : 0.0);
  }
  return Tensor::vector(std::move(out));
}

inline Tensor convolve(const ConvParams& p, const Tensor& x) {
  const Shape out_shape = conv_output_shape(p);
  const auto& ws = p.weight.shape();
  const std::size_t spatial = ws.rank() - 2;
  const std::size_t c_out = ws[0];
  const std::size_t c_in_group = ws[1];
  const std::size_t c_out_group = c_out / p.groups;

  std::vector<std::size_t> in_strides(spatial + 1, 1);
  for (std::size_t d = spatial; d-- > 0;) in_strides[d] = in_strides[d + 1] * p.input_shape[d + 1];
  std::size_t kernel_volume = 1;
  for (std::size_t d = 0; d < spatial; ++d) kernel_volume *= ws[d + 2];
  std::size_t out_volume = 1;
  for (std::size_t d = 0; d < spatial; ++d) out_volume *= out_shape[d + 1];

  std::vector<double> out(out_shape.numel(), 0.0);
  std::vector<std::size_t> opos(spatial), kpos(spatial);
  for (std::size_t co = 0; co < c_out; ++co) {
    const std::size_t group = co / c_out_group;
    for (std::size_t o = 0; o < out_volume; ++o) {
      std::size_t rem = o;
      for (std::size_t d = spatial; d-- > 0;) {
        opos[d] = rem % out_shape[d + 1];
        rem /= out_shape[d + 1];
      }
      double acc = 0.0;
      for (std::size_t ci = 0; ci < c_in_group; ++ci) {
        const std::size_t channel = group * c_in_group + ci;
        for (std::size_t kk = 0; kk < kernel_volume; ++kk) {
          std::size_t krem = kk;
          bool inside = true;
          std::size_t offset = channel * in_strides[0];
          for (std::size_t d = spatial; d-- > 0;) {
            kpos[d] = krem % ws[d + 2];
            krem /= ws[d + 2];
          }
          for (std::size_t d = 0; d < spatial && inside; ++d) {
            const long long pos = static_cast<long long>(opos[d] * p.stride[d]) -
                                  static_cast<long long>(p.padding[d]) +
                                  static_cast<long long>(kpos[d] * p.dilation[d]);
            if (pos < 0 || pos >= static_cast<long long>(p.input_shape[d + 1])) inside = false;
            else offset += static_cast<std::size_t>(pos) * in_strides[d + 1];
          }
          if (!inside) continue;
          const double w = p.weight[(co * c_in_group + ci) * kernel_volume + kk];
          acc += w * x[offset];
        }
      }
      out[co * out_volume + o] = acc + p.bias[co];
    }
  }
  return Tensor(out_shape, std::move(out));
}

}  // namespace detail

// Evaluates a memoryless primitive on one input sample.
inline Tensor stateless_apply(const PrimitiveParams& params, const Tensor& input) {
  const PortSignature sig = port_signature(params);
  if (sig.inputs.empty()) {
    fail(ErrorCode::invalid_argument, "input nodes take no input");
  }
  if (input.shape() != sig.inputs.front().shape) {
    fail(ErrorCode::shape_mismatch, "input shape " + input.shape().to_string() +
                                        " does not match port shape " +
                                        sig.inputs.front().shape.to_string());
  }
  return std::visit(
      overloaded{
          [&](const OutputParams&) { return input; },
          [&](const AffineParams& p) { return detail::matvec(p.weight, input, &p.bias); },
          [&](const LinearParams& p) { return detail::matvec(p.weight, input, nullptr); },
          [&](const ScaleParams& p) {
            Tensor out = input;
            for (std::size_t k = 0; k < out.size(); ++k) out[k] = p.scale[k] * input[k];
            return out;
          },
          [&](const ConvParams& p) { return detail::convolve(p, input); },
          [&](const FlattenParams& p) { return input.reshaped(flatten_output_shape(p)); },
          [&](const SpikeParams& p) {
            Tensor out = Tensor::zeros(input.shape());
            for (std::size_t k = 0; k < out.size(); ++k)
              out[k] = input[k] >= p.threshold[k] ? 1.0 : 0.0;
            return out;
          },
          [&](const auto&) -> Tensor {
            fail(ErrorCode::invalid_argument, std::string(kind_name(kind_of(params))) +
                                                  " is not a stateless primitive");
          },
      },
      params);
}

}  // namespace nir
