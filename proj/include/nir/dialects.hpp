#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nir/error.hpp"
#include "nir/primitives.hpp"
#include "nir/tensor.hpp"

namespace nir {

// ---------------------------------------------------------------------------
// Discretization policy
// ---------------------------------------------------------------------------

enum class Integrator { forward_euler, exponential_euler, bitshift };
enum class ResetMode { hard, subtractive };
enum class ThresholdOrder { post_update, pre_leak };

struct FixedPoint {
  int state_bits = 16;
  int weight_bits = 8;
  int accumulator_bits = 32;
  friend bool operator==(const FixedPoint&, const FixedPoint&) = default;
};

struct DialectConfig {
  std::string name;  // informational label, empty for ad-hoc configs
  double dt = 1e-3;
  Integrator decay = Integrator::forward_euler;
  std::optional<int> d_mem;  // bitshift overrides; derived from tau when unset
  std::optional<int> d_syn;
  ResetMode reset = ResetMode::subtractive;
  std::optional<Tensor> theta_reset;  // defaults to each node's threshold
  ThresholdOrder threshold_order = ThresholdOrder::post_update;
  std::size_t spike_delay_steps = 0;
  std::optional<FixedPoint> fixed;  // nullopt means float64
};

constexpr const char* integrator_name(Integrator i) {
  switch (i) {
    case Integrator::forward_euler: return "forward_euler";
    case Integrator::exponential_euler: return "exponential_euler";
    case Integrator::bitshift: return "bitshift";
  }
  return "?";
}
constexpr const char* reset_name(ResetMode r) {
  return r == ResetMode::hard ? "hard" : "subtractive";
}
constexpr const char* order_name(ThresholdOrder o) {
  return o == ThresholdOrder::pre_leak ? "pre_leak" : "post_update";
}

inline std::vector<std::string> config_problems(const DialectConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) out.push_back("dt must be positive and finite");
  const bool bitshift = cfg.decay == Integrator::bitshift;
  if (bitshift && !cfg.fixed) out.push_back("bitshift decay requires fixed numeric mode");
  if (!bitshift && cfg.fixed) out.push_back("fixed numeric mode is only implemented for bitshift decay");
  if (bitshift && cfg.threshold_order == ThresholdOrder::pre_leak)
    out.push_back("bitshift decay only supports post_update threshold ordering");
  if (cfg.fixed) {
    const auto& f = *cfg.fixed;
    if (f.state_bits < 2 || f.state_bits > 32) out.push_back("state_bits must lie in [2, 32]");
    if (f.weight_bits < 2 || f.weight_bits > 32) out.push_back("weight_bits must lie in [2, 32]");
    if (f.accumulator_bits < f.state_bits || f.accumulator_bits > 48)
      out.push_back("accumulator_bits must lie in [state_bits, 48]");
  }
  for (const auto* d : {&cfg.d_mem, &cfg.d_syn})
    if (*d && **d < 0) out.push_back("bit-shift counts must be non-negative");
  return out;
}

inline void check_config(const DialectConfig& cfg) {
  const auto problems = config_problems(cfg);
  if (!problems.empty()) fail(ErrorCode::invalid_argument, "invalid dialect config: " + problems.front());
}

// ---------------------------------------------------------------------------
// Float kernels
// ---------------------------------------------------------------------------

// v' = decay·v + gain·v_leak + gain·R·i
struct LeakCoefficients {
  double decay;
  double gain;
};

inline LeakCoefficients leak_coefficients(Integrator mode, double dt, double tau) {
  if (mode == Integrator::exponential_euler) return {std::exp(-dt / tau), -std::expm1(-dt / tau)};
  return {1.0 - dt / tau, dt / tau};
}

struct LeakyUpdate {
  double next;   // stored state after the full update
  double probe;  // value seen by the threshold check and emitted downstream
};

// Shared by every leaky and integrating kind so that decomposed graphs see the
// same operation sequence as their monolithic counterparts.
inline LeakyUpdate leaky_update(double v, double v_leak, double r, double i, LeakCoefficients c,
                                ThresholdOrder order) {
  const double drive = c.gain * (r * i);
  const double next = c.decay * v + c.gain * v_leak + drive;
  const double probe = order == ThresholdOrder::pre_leak ? v + drive : next;
  return {next, probe};
}

// Constant-input closed form of the LIF membrane.
inline double lif_exact(double tau, double r, double v_leak, double v0, double i0, double t) {
  const double e = std::exp(-t / tau);
  return v_leak + r * i0 * (1.0 - e) + (v0 - v_leak) * e;
}

inline Tensor lif_exact(const LifParams& p, const Tensor& v0, const Tensor& i0, double t) {
  if (v0.shape() != p.tau.shape() || i0.shape() != p.tau.shape())
    fail(ErrorCode::shape_mismatch, "lif_exact: state/input shape does not match parameters");
  Tensor out = Tensor::zeros(p.tau.shape());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = lif_exact(p.tau[k], p.r[k], p.v_leak[k], v0[k], i0[k], t);
  return out;
}

// ---------------------------------------------------------------------------
// Integer kernels
// ---------------------------------------------------------------------------

inline std::int64_t saturate(std::int64_t x, int bits, std::uint64_t& overflow) {
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  if (x > hi) {
    ++overflow;
    return hi;
  }
  if (x < lo) {
    ++overflow;
    return lo;
  }
  return x;
}

// x - (x >> d) when the shift is non-zero, otherwise a unit step toward 0.
// Negative values mirror positive ones; 0 is a fixed point.
inline std::int64_t bitshift_decay(std::int64_t x, int d) {
  if (x == 0) return 0;
  const std::int64_t mag = x < 0 ? -x : x;
  const std::int64_t s = mag >> d;
  const std::int64_t decayed = s > 0 ? mag - s : mag - 1;
  return x < 0 ? -decayed : decayed;
}

// d = round(log2(tau/dt)) clamped to [0, state_bits - 1].
inline int shift_for_tau(double tau, double dt, int state_bits) {
  const double d = std::round(std::log2(tau / dt));
  if (!(d > 0.0)) return 0;
  return static_cast<int>(std::min<double>(d, state_bits - 1));
}

// ---------------------------------------------------------------------------
// Per-node state and step functions
// ---------------------------------------------------------------------------

// Float modes store real values; fixed mode stores integers in the same
// tensors (exactly representable for widths up to 48 bits).
struct CellState {
  Tensor v;
  Tensor u;                       // synaptic current, cuba_lif only
  std::deque<Tensor> delay_line;  // events waiting out spike_delay_steps
  std::uint64_t overflow = 0;
};

struct CellStep {
  CellState state;
  Tensor output;
};

namespace detail {

inline void require_shape(const Tensor& ref, const Tensor& x, const char* what) {
  if (x.shape() != ref.shape())
    fail(ErrorCode::shape_mismatch, std::string(what) + " shape " + x.shape().to_string() +
                                        " does not match " + ref.shape().to_string());
}

inline const Tensor& reset_amount(const DialectConfig& cfg, const Tensor& threshold) {
  if (!cfg.theta_reset) return threshold;
  require_shape(threshold, *cfg.theta_reset, "theta_reset");
  return *cfg.theta_reset;
}

inline Tensor delay_events(const DialectConfig& cfg, CellState& s, Tensor events) {
  if (cfg.spike_delay_steps == 0) return events;
  s.delay_line.push_back(std::move(events));
  if (s.delay_line.size() <= cfg.spike_delay_steps)
    return Tensor::zeros(s.delay_line.back().shape());
  Tensor out = std::move(s.delay_line.front());
  s.delay_line.pop_front();
  return out;
}

inline double checked_div(double num, double den, const char* what) {
  if (den == 0.0) fail(ErrorCode::division_by_zero, std::string(what) + " is zero");
  return num / den;
}

inline std::int64_t saturate_input(double x, int bits, std::uint64_t& overflow) {
  const double r = std::nearbyint(x);
  const double limit = std::ldexp(1.0, bits - 1);
  if (r >= limit) {
    ++overflow;
    return static_cast<std::int64_t>(limit) - 1;
  }
  if (r < -limit) {
    ++overflow;
    return -static_cast<std::int64_t>(limit);
  }
  return static_cast<std::int64_t>(r);
}

struct IntegerNeuron {
  std::vector<std::int64_t> theta, theta_reset, bias, d_mem, d_syn;
};

// Threshold, reset and bias in the integer domain, derived from the forward
// Euler translation. Throws NumericOverflow when the threshold does not fit.
inline IntegerNeuron integer_neuron(const PrimitiveParams& params, const DialectConfig& cfg) {
  const int bits = cfg.fixed->state_bits;
  const double dt = cfg.dt;
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  IntegerNeuron out;
  auto to_int = [&](double x, const char* what) {
    const double r = std::nearbyint(x);
    if (!std::isfinite(r) || std::abs(r) > static_cast<double>(hi))
      fail(ErrorCode::numeric_overflow, std::string(what) + " " + format_double(x) +
                                            " does not fit in " + std::to_string(bits) + " bits");
    return static_cast<std::int64_t>(r);
  };
  auto fill = [&](const Tensor& threshold, const std::vector<double>& scale,
                  const std::vector<double>& bias) {
    const Tensor& rst = reset_amount(cfg, threshold);
    for (std::size_t k = 0; k < threshold.size(); ++k) {
      out.theta.push_back(to_int(threshold[k] * scale[k], "threshold"));
      out.theta_reset.push_back(to_int(rst[k] * scale[k], "reset amount"));
      out.bias.push_back(to_int(bias[k], "bias"));
    }
  };
  std::visit(overloaded{
                 [&](const LifParams& p) {
                   std::vector<double> scale, bias;
                   for (std::size_t k = 0; k < p.tau.size(); ++k) {
                     scale.push_back(checked_div(p.tau[k], dt * p.r[k], "R"));
                     bias.push_back(checked_div(p.v_leak[k], p.r[k], "R"));
                     out.d_mem.push_back(cfg.d_mem.value_or(shift_for_tau(p.tau[k], dt, bits)));
                   }
                   fill(p.threshold, scale, bias);
                 },
                 [&](const CubaLifParams& p) {
                   std::vector<double> scale, bias;
                   for (std::size_t k = 0; k < p.tau_mem.size(); ++k) {
                     const double syn = checked_div(p.tau_syn[k], dt * p.w_in[k], "w_in");
                     scale.push_back(checked_div(p.tau_mem[k], dt * p.r[k], "R") * syn);
                     bias.push_back(checked_div(p.v_leak[k], p.r[k], "R") * syn);
                     out.d_mem.push_back(cfg.d_mem.value_or(shift_for_tau(p.tau_mem[k], dt, bits)));
                     out.d_syn.push_back(cfg.d_syn.value_or(shift_for_tau(p.tau_syn[k], dt, bits)));
                   }
                   fill(p.threshold, scale, bias);
                 },
                 [&](const IfParams& p) {
                   std::vector<double> scale(p.r.size()), bias(p.r.size(), 0.0);
                   for (std::size_t k = 0; k < p.r.size(); ++k)
                     scale[k] = checked_div(1.0, dt * p.r[k], "R");
                   fill(p.threshold, scale, bias);
                 },
                 [&](const auto&) {
                   fail(ErrorCode::invalid_argument,
                        std::string("bitshift decay is not defined for ") +
                            std::string(kind_name(kind_of(params))));
                 },
             },
             params);
  return out;
}

}  // namespace detail

// Integer neuron update (Xylo-style). Order per step: I += i; I decays;
// V decays; V += I + b; spike where V >= Θ; reset.
inline CellStep step_bitshift(const PrimitiveParams& params, const DialectConfig& cfg, CellState s,
                              const Tensor& input) {
  check_config(cfg);
  if (cfg.decay != Integrator::bitshift) fail(ErrorCode::invalid_argument, "config is not bitshift");
  detail::require_shape(s.v, input, "input");
  const auto neuron = detail::integer_neuron(params, cfg);
  const int sb = cfg.fixed->state_bits;
  const int ab = cfg.fixed->accumulator_bits;
  const Kind kind = kind_of(params);
  Tensor events = Tensor::zeros(s.v.shape());
  for (std::size_t k = 0; k < s.v.size(); ++k) {
    const std::int64_t in = detail::saturate_input(input[k], ab, s.overflow);
    std::int64_t v = static_cast<std::int64_t>(s.v[k]);
    if (kind == Kind::cuba_lif) {
      std::int64_t cur = static_cast<std::int64_t>(s.u[k]);
      cur = saturate(cur + in, sb, s.overflow);
      cur = bitshift_decay(cur, neuron.d_syn[k]);
      v = bitshift_decay(v, neuron.d_mem[k]);
      v = saturate(v + cur + neuron.bias[k], sb, s.overflow);
      s.u[k] = static_cast<double>(cur);
    } else if (kind == Kind::lif) {
      v = bitshift_decay(v, neuron.d_mem[k]);
      v = saturate(v + in + neuron.bias[k], sb, s.overflow);
    } else {
      v = saturate(v + in, sb, s.overflow);
    }
    if (v >= neuron.theta[k]) {
      events[k] = 1.0;
      v = cfg.reset == ResetMode::hard ? 0 : saturate(v - neuron.theta_reset[k], sb, s.overflow);
    }
    s.v[k] = static_cast<double>(v);
  }
  Tensor out = detail::delay_events(cfg, s, std::move(events));
  return {std::move(s), std::move(out)};
}

namespace detail {

inline CellStep step_threshold_neuron(const Tensor& tau_or_empty, const Tensor& r,
                               const Tensor* v_leak, const Tensor& threshold,
                               const DialectConfig& cfg, CellState s, const Tensor& input) {
  require_shape(threshold, s.v, "state");
  require_shape(threshold, input, "input");
  const Tensor& rst = reset_amount(cfg, threshold);
  Tensor events = Tensor::zeros(threshold.shape());
  for (std::size_t k = 0; k < threshold.size(); ++k) {
    const LeakCoefficients c = tau_or_empty.empty()
                                   ? LeakCoefficients{1.0, cfg.dt}
                                   : leak_coefficients(cfg.decay, cfg.dt, tau_or_empty[k]);
    const auto upd = leaky_update(s.v[k], v_leak ? (*v_leak)[k] : 0.0, r[k], input[k], c,
                                  cfg.threshold_order);
    double v = upd.next;
    if (upd.probe >= threshold[k]) {
      events[k] = 1.0;
      v = cfg.reset == ResetMode::hard ? 0.0 : v - rst[k];
    }
    s.v[k] = v;
  }
  Tensor out = delay_events(cfg, s, std::move(events));
  return {std::move(s), std::move(out)};
}

}  // namespace detail

inline CellStep step_lif(const LifParams& p, const DialectConfig& cfg, CellState s,
                         const Tensor& input) {
  if (cfg.decay == Integrator::bitshift) return step_bitshift(p, cfg, std::move(s), input);
  return detail::step_threshold_neuron(p.tau, p.r, &p.v_leak, p.threshold, cfg, std::move(s),
                                       input);
}

inline CellStep step_if(const IfParams& p, const DialectConfig& cfg, CellState s,
                        const Tensor& input) {
  if (cfg.decay == Integrator::bitshift) return step_bitshift(p, cfg, std::move(s), input);
  return detail::step_threshold_neuron(Tensor{}, p.r, nullptr, p.threshold, cfg, std::move(s),
                                       input);
}

// The membrane is driven by the synaptic value emitted this step, which is
// what the LIF ∘ Linear ∘ LI composition computes.
inline CellStep step_cuba_lif(const CubaLifParams& p, const DialectConfig& cfg, CellState s,
                              const Tensor& input) {
  if (cfg.decay == Integrator::bitshift) return step_bitshift(p, cfg, std::move(s), input);
  detail::require_shape(p.threshold, s.v, "state v");
  detail::require_shape(p.threshold, s.u, "state u");
  detail::require_shape(p.threshold, input, "input");
  const Tensor& rst = detail::reset_amount(cfg, p.threshold);
  Tensor events = Tensor::zeros(p.threshold.shape());
  for (std::size_t k = 0; k < p.threshold.size(); ++k) {
    const auto syn = leaky_update(s.u[k], 0.0, p.w_in[k], input[k],
                                  leak_coefficients(cfg.decay, cfg.dt, p.tau_syn[k]),
                                  cfg.threshold_order);
    s.u[k] = syn.next;
    const auto mem = leaky_update(s.v[k], p.v_leak[k], p.r[k], syn.probe,
                                  leak_coefficients(cfg.decay, cfg.dt, p.tau_mem[k]),
                                  cfg.threshold_order);
    double v = mem.next;
    if (mem.probe >= p.threshold[k]) {
      events[k] = 1.0;
      v = cfg.reset == ResetMode::hard ? 0.0 : v - rst[k];
    }
    s.v[k] = v;
  }
  Tensor out = detail::delay_events(cfg, s, std::move(events));
  return {std::move(s), std::move(out)};
}

// Leaky integrator; emits the probe value (the post-update state unless the
// dialect checks thresholds before the leak).
inline CellStep step_li(const LeakyIntegratorParams& p, const DialectConfig& cfg, CellState s,
                        const Tensor& input) {
  if (cfg.decay == Integrator::bitshift)
    fail(ErrorCode::invalid_argument, "bitshift decay is not defined for li");
  detail::require_shape(p.tau, s.v, "state");
  detail::require_shape(p.tau, input, "input");
  Tensor out = Tensor::zeros(p.tau.shape());
  for (std::size_t k = 0; k < p.tau.size(); ++k) {
    const auto upd = leaky_update(s.v[k], p.v_leak[k], p.r[k], input[k],
                                  leak_coefficients(cfg.decay, cfg.dt, p.tau[k]),
                                  cfg.threshold_order);
    s.v[k] = upd.next;
    out[k] = upd.probe;
  }
  return {std::move(s), std::move(out)};
}

inline CellStep step_integrator(const IntegratorParams& p, const DialectConfig& cfg, CellState s,
                                const Tensor& input) {
  if (cfg.decay == Integrator::bitshift)
    fail(ErrorCode::invalid_argument, "bitshift decay is not defined for integrator");
  detail::require_shape(p.r, s.v, "state");
  detail::require_shape(p.r, input, "input");
  Tensor out = Tensor::zeros(p.r.shape());
  for (std::size_t k = 0; k < p.r.size(); ++k) {
    const auto upd =
        leaky_update(s.v[k], 0.0, p.r[k], input[k], {1.0, cfg.dt}, cfg.threshold_order);
    s.v[k] = upd.next;
    out[k] = upd.probe;
  }
  return {std::move(s), std::move(out)};
}

// Dispatches on the stateful kind.
inline CellStep step_cell(const PrimitiveParams& params, const DialectConfig& cfg, CellState s,
                          const Tensor& input) {
  return std::visit(
      overloaded{
          [&](const IntegratorParams& p) { return step_integrator(p, cfg, std::move(s), input); },
          [&](const LeakyIntegratorParams& p) { return step_li(p, cfg, std::move(s), input); },
          [&](const IfParams& p) { return step_if(p, cfg, std::move(s), input); },
          [&](const LifParams& p) { return step_lif(p, cfg, std::move(s), input); },
          [&](const CubaLifParams& p) { return step_cuba_lif(p, cfg, std::move(s), input); },
          [&](const auto&) -> CellStep {
            fail(ErrorCode::invalid_argument,
                 std::string(kind_name(kind_of(params))) + " carries no state");
          },
      },
      params);
}

// Applies a value received on the "reset" port after the threshold check:
// subtractive mode adds it to the membrane, hard mode zeroes the membrane
// wherever it is non-zero.
inline CellState apply_reset_input(const DialectConfig& cfg, CellState s, const Tensor& r) {
  detail::require_shape(s.v, r, "reset");
  const bool fixed = cfg.fixed.has_value();
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] == 0.0) continue;
    if (cfg.reset == ResetMode::hard) {
      s.v[k] = 0.0;
    } else if (fixed) {
      const auto delta = static_cast<std::int64_t>(std::nearbyint(r[k]));
      s.v[k] = static_cast<double>(
          saturate(static_cast<std::int64_t>(s.v[k]) + delta, cfg.fixed->state_bits, s.overflow));
    } else {
      s.v[k] += r[k];
    }
  }
  return s;
}

// Equilibrium start: v = v_leak for leaky kinds, zero elsewhere. In fixed mode
// v_leak is mapped into the integer domain of the translated update.
inline CellState initial_cell_state(const PrimitiveParams& params, const DialectConfig& cfg) {
  CellState s;
  const Shape shape = port_signature(params).outputs.front().shape;
  s.v = Tensor::zeros(shape);
  std::visit(overloaded{
                 [&](const LeakyIntegratorParams& p) { s.v = p.v_leak; },
                 [&](const LifParams& p) {
                   if (!cfg.fixed) {
                     s.v = p.v_leak;
                     return;
                   }
                   for (std::size_t k = 0; k < s.v.size(); ++k)
                     s.v[k] = std::nearbyint(detail::checked_div(
                         p.v_leak[k] * p.tau[k], cfg.dt * p.r[k], "R"));
                 },
                 [&](const CubaLifParams& p) {
                   s.u = Tensor::zeros(shape);
                   if (!cfg.fixed) {
                     s.v = p.v_leak;
                     return;
                   }
                   for (std::size_t k = 0; k < s.v.size(); ++k)
                     s.v[k] = std::nearbyint(
                         detail::checked_div(p.v_leak[k] * p.tau_mem[k], cfg.dt * p.r[k], "R") *
                         detail::checked_div(p.tau_syn[k], cfg.dt * p.w_in[k], "w_in"));
                 },
                 [](const auto&) {},
             },
             params);
  return s;
}

// ---------------------------------------------------------------------------
// SpiNNaker2 parameter translation
// ---------------------------------------------------------------------------

enum class SpinnakerMode { exp_euler, fwd_euler };

// v(t) = α·v(t-1) + i(t) + i_offset, spike at v >= Θ. CuBa adds
// I(t) = α_syn·I(t-1) + i(t) in front, and the membrane takes I(t).
struct TranslatedLIF {
  Tensor alpha;
  Tensor theta;
  Tensor i_offset;
  std::optional<Tensor> alpha_syn;
  Tensor v0;  // initial state matching v = v_leak in NIR units
};

inline TranslatedLIF translate_spinnaker2_lif(const LifParams& p, double dt, SpinnakerMode mode,
                                              const Tensor* i_bias = nullptr) {
  if (dt == 0.0) fail(ErrorCode::division_by_zero, "dt is zero");
  TranslatedLIF out{Tensor::zeros(p.tau.shape()), Tensor::zeros(p.tau.shape()),
                    Tensor::zeros(p.tau.shape()), std::nullopt, Tensor::zeros(p.tau.shape())};
  const Integrator integ =
      mode == SpinnakerMode::exp_euler ? Integrator::exponential_euler : Integrator::forward_euler;
  for (std::size_t k = 0; k < p.tau.size(); ++k) {
    if (p.r[k] == 0.0) fail(ErrorCode::division_by_zero, "R is zero");
    const auto c = leak_coefficients(integ, dt, p.tau[k]);
    out.alpha[k] = c.decay;
    out.theta[k] = mode == SpinnakerMode::exp_euler ? p.threshold[k] / (c.gain * p.r[k])
                                                    : p.threshold[k] * (p.tau[k] / (dt * p.r[k]));
    out.i_offset[k] = p.v_leak[k] / p.r[k] + (i_bias ? (*i_bias)[k] : 0.0);
    out.v0[k] = p.v_leak[k] / (c.gain * p.r[k]);
  }
  return out;
}

inline TranslatedLIF translate_spinnaker2_cuba(const CubaLifParams& p, double dt,
                                               SpinnakerMode mode, const Tensor* i_bias = nullptr) {
  if (dt == 0.0) fail(ErrorCode::division_by_zero, "dt is zero");
  const Shape& shape = p.tau_mem.shape();
  TranslatedLIF out{Tensor::zeros(shape), Tensor::zeros(shape), Tensor::zeros(shape),
                    Tensor::zeros(shape), Tensor::zeros(shape)};
  const bool exp_mode = mode == SpinnakerMode::exp_euler;
  const Integrator integ = exp_mode ? Integrator::exponential_euler : Integrator::forward_euler;
  for (std::size_t k = 0; k < shape.numel(); ++k) {
    if (p.r[k] == 0.0) fail(ErrorCode::division_by_zero, "R is zero");
    if (p.w_in[k] == 0.0) fail(ErrorCode::division_by_zero, "w_in is zero");
    const auto mem = leak_coefficients(integ, dt, p.tau_mem[k]);
    const auto syn = leak_coefficients(integ, dt, p.tau_syn[k]);
    const double bias = i_bias ? (*i_bias)[k] : 0.0;
    out.alpha[k] = mem.decay;
    (*out.alpha_syn)[k] = syn.decay;
    if (exp_mode) {
      out.theta[k] = p.threshold[k] / (mem.gain * p.r[k] * syn.gain * p.w_in[k]);
      out.i_offset[k] = p.v_leak[k] / p.r[k] / (syn.gain * p.w_in[k]) + bias / syn.gain;
    } else {
      out.theta[k] = p.threshold[k] * (p.tau_mem[k] / (dt * p.r[k])) *
                     (p.tau_syn[k] / (dt * p.w_in[k]));
      out.i_offset[k] = p.v_leak[k] / p.r[k] * (p.tau_syn[k] / (dt * p.w_in[k])) +
                        bias * (dt / p.tau_syn[k]);
    }
    out.v0[k] = p.v_leak[k] / (mem.gain * p.r[k] * syn.gain * p.w_in[k]);
  }
  return out;
}

// Runs the translated update; the reset amount is Θ (subtractive) or 0 (hard).
inline std::vector<Tensor> simulate_translated(const TranslatedLIF& tr, ResetMode reset,
                                               const std::vector<Tensor>& inputs) {
  Tensor v = tr.v0;
  Tensor cur = Tensor::zeros(v.shape());
  std::vector<Tensor> events;
  events.reserve(inputs.size());
  for (const auto& i : inputs) {
    detail::require_shape(v, i, "input");
    Tensor ev = Tensor::zeros(v.shape());
    for (std::size_t k = 0; k < v.size(); ++k) {
      double drive = i[k];
      if (tr.alpha_syn) {
        cur[k] = (*tr.alpha_syn)[k] * cur[k] + i[k];
        drive = cur[k];
      }
      v[k] = tr.alpha[k] * v[k] + drive + tr.i_offset[k];
      if (v[k] >= tr.theta[k]) {
        ev[k] = 1.0;
        v[k] = reset == ResetMode::hard ? 0.0 : v[k] - tr.theta[k];
      }
    }
    events.push_back(std::move(ev));
  }
  return events;
}

// ---------------------------------------------------------------------------
// Named dialects
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& named_dialects() {
  static const std::vector<std::string> names{
      "lava_dl", "nengo",    "norse",        "rockpool_sinabs", "snntorch", "spinnaker2_exp_euler",
      "spinnaker2_fwd_euler", "xylo"};
  return names;
}

inline bool is_named_dialect(const std::string& name) {
  const auto& n = named_dialects();
  return std::find(n.begin(), n.end(), name) != n.end();
}

inline DialectConfig named_config(const std::string& name, double dt) {
  DialectConfig cfg;
  cfg.name = name;
  cfg.dt = dt;
  if (name == "norse") {
    cfg.reset = ResetMode::hard;
  } else if (name == "snntorch") {
    cfg.reset = ResetMode::subtractive;
  } else if (name == "lava_dl") {
    cfg.reset = ResetMode::hard;
    cfg.spike_delay_steps = 1;
  } else if (name == "rockpool_sinabs") {
    cfg.decay = Integrator::exponential_euler;
    cfg.threshold_order = ThresholdOrder::pre_leak;
  } else if (name == "spinnaker2_exp_euler" || name == "nengo") {
    cfg.decay = Integrator::exponential_euler;
  } else if (name == "spinnaker2_fwd_euler") {
    cfg.decay = Integrator::forward_euler;
  } else if (name == "xylo") {
    cfg.decay = Integrator::bitshift;
    cfg.fixed = FixedPoint{16, 8, 32};
  } else {
    fail(ErrorCode::invalid_argument, "unknown dialect '" + name + "'");
  }
  check_config(cfg);
  return cfg;
}

struct NamedTranslation {
  DialectConfig config;
  std::map<std::string, Tensor> backend_params;  // the backend's own parameter names
  std::vector<std::string> notes;                // residual non-equivalences
};

namespace detail {

inline Tensor elementwise(const Shape& shape, const std::function<double(std::size_t)>& f) {
  Tensor t = Tensor::zeros(shape);
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = f(k);
  return t;
}

inline void require_zero_leak(const Tensor& v_leak, const std::string& dialect) {
  if (!all_of(v_leak, [](double x) { return x == 0.0; }))
    fail(ErrorCode::unsatisfiable_constraint,
         dialect + " requires v_leak·dt/τ = 0 but v_leak is non-zero");
}

}  // namespace detail

// Maps NIR parameters onto a backend's own parameterization. The returned
// config is what the engine uses to reproduce that backend's update.
inline NamedTranslation translate_named(const PrimitiveParams& params, const std::string& name,
                                        double dt) {
  NamedTranslation out{named_config(name, dt), {}, {}};
  auto& bp = out.backend_params;
  auto& notes = out.notes;
  using detail::elementwise;

  if (const auto* p = std::get_if<LifParams>(&params)) {
    const Shape& sh = p->tau.shape();
    if (name == "norse") {
      bp["tau_mem_inv"] = elementwise(sh, [&](auto k) { return 1.0 / p->tau[k]; });
      bp["v_leak"] = p->v_leak;
      bp["v_th"] = p->threshold;
      bp["input_scale"] = p->r;
      notes.push_back("no resistance term; R is applied as an input scale");
    } else if (name == "snntorch") {
      detail::require_zero_leak(p->v_leak, name);
      bp["beta"] = elementwise(sh, [&](auto k) { return 1.0 - dt / p->tau[k]; });
      bp["input_scale"] = elementwise(sh, [&](auto k) { return p->r[k] * dt / p->tau[k]; });
      bp["threshold"] = p->threshold;
      notes.push_back("R·dt/τ realized by a diagonal linear layer in front of the neuron");
    } else if (name == "lava_dl") {
      detail::require_zero_leak(p->v_leak, name);
      bp["alpha_u"] = Tensor::full(sh, 1.0);
      bp["alpha_v"] = elementwise(sh, [&](auto k) { return dt / p->tau[k]; });
      bp["input_scale"] = elementwise(sh, [&](auto k) { return p->r[k] * dt / p->tau[k]; });
      bp["threshold"] = p->threshold;
      notes.push_back("spikes are emitted one timestep late");
    } else if (name == "rockpool_sinabs") {
      bp["alpha"] = elementwise(sh, [&](auto k) { return std::exp(-dt / p->tau[k]); });
      bp["input_scale"] =
          elementwise(sh, [&](auto k) { return -std::expm1(-dt / p->tau[k]) * p->r[k]; });
      bp["bias"] =
          elementwise(sh, [&](auto k) { return -std::expm1(-dt / p->tau[k]) * p->v_leak[k]; });
      bp["threshold"] = p->threshold;
      notes.push_back("threshold is checked on the integrated value before the leak");
      notes.push_back("noise term omitted");
    } else if (name == "spinnaker2_exp_euler" || name == "spinnaker2_fwd_euler" ||
               name == "nengo") {
      const auto mode = name == "spinnaker2_fwd_euler" ? SpinnakerMode::fwd_euler
                                                       : SpinnakerMode::exp_euler;
      const auto tr = translate_spinnaker2_lif(*p, dt, mode);
      bp["alpha_decay"] = tr.alpha;
      bp["i_offset"] = tr.i_offset;
      if (name == "nengo") {
        bp["gain"] = elementwise(sh, [&](auto k) { return 1.0 / tr.theta[k]; });
        bp["threshold"] = Tensor::full(sh, 1.0);
        notes.push_back("fixed unit threshold; Θ folded into a per-neuron input gain");
      } else {
        bp["threshold"] = tr.theta;
      }
    } else if (name == "xylo") {
      const auto neuron = detail::integer_neuron(params, out.config);
      std::vector<double> d(neuron.d_mem.begin(), neuron.d_mem.end());
      bp["d_mem"] = Tensor(sh, d);
      bp["threshold"] = Tensor(sh, std::vector<double>(neuron.theta.begin(), neuron.theta.end()));
      bp["bias"] = Tensor(sh, std::vector<double>(neuron.bias.begin(), neuron.bias.end()));
      notes.push_back("hardware neurons are CuBa-LIF; lower with a one-step synapse");
      notes.push_back("decay approximated by integer bit shifts");
    }
    return out;
  }

  if (const auto* p = std::get_if<CubaLifParams>(&params)) {
    const Shape& sh = p->tau_mem.shape();
    if (name == "norse") {
      bp["tau_syn_inv"] = elementwise(sh, [&](auto k) { return 1.0 / p->tau_syn[k]; });
      bp["tau_mem_inv"] = elementwise(sh, [&](auto k) { return 1.0 / p->tau_mem[k]; });
      bp["v_leak"] = p->v_leak;
      bp["v_th"] = p->threshold;
      bp["input_scale"] = p->w_in;
      bp["syn_to_mem_weight"] = p->r;
      notes.push_back("w_in applied as an input scale and R as a synapse-to-soma weight");
    } else if (name == "snntorch" || name == "lava_dl") {
      detail::require_zero_leak(p->v_leak, name);
      const bool lava = name == "lava_dl";
      bp[lava ? "alpha_u" : "alpha"] = elementwise(sh, [&](auto k) {
        return lava ? dt / p->tau_syn[k] : 1.0 - dt / p->tau_syn[k];
      });
      bp[lava ? "alpha_v" : "beta"] = elementwise(sh, [&](auto k) {
        return lava ? dt / p->tau_mem[k] : 1.0 - dt / p->tau_mem[k];
      });
      bp["input_scale"] =
          elementwise(sh, [&](auto k) { return p->w_in[k] * dt / p->tau_syn[k]; });
      bp["threshold"] = elementwise(
          sh, [&](auto k) { return p->threshold[k] / (p->r[k] * dt / p->tau_mem[k]); });
      notes.push_back("R·dt/τ_mem folded into the threshold");
      if (lava) notes.push_back("spikes are emitted one timestep late");
    } else if (name == "rockpool_sinabs") {
      bp["alpha"] = elementwise(sh, [&](auto k) { return std::exp(-dt / p->tau_mem[k]); });
      bp["beta"] = elementwise(sh, [&](auto k) { return std::exp(-dt / p->tau_syn[k]); });
      bp["threshold"] = p->threshold;
      notes.push_back("membrane decay assumed to be exp(-dt/τ_mem)");
      notes.push_back("threshold is checked on the integrated value before the leak");
      notes.push_back("noise term omitted");
    } else if (name == "spinnaker2_exp_euler" || name == "spinnaker2_fwd_euler" ||
               name == "nengo") {
      const auto mode = name == "spinnaker2_fwd_euler" ? SpinnakerMode::fwd_euler
                                                       : SpinnakerMode::exp_euler;
      const auto tr = translate_spinnaker2_cuba(*p, dt, mode);
      bp["alpha_mem"] = tr.alpha;
      bp["alpha_syn"] = *tr.alpha_syn;
      bp["i_offset"] = tr.i_offset;
      if (name == "nengo") {
        bp["gain"] = elementwise(sh, [&](auto k) { return 1.0 / tr.theta[k]; });
        bp["threshold"] = Tensor::full(sh, 1.0);
      } else {
        bp["threshold"] = tr.theta;
      }
      notes.push_back("bias folded into i_offset converges to the same voltage but is not exact");
    } else if (name == "xylo") {
      const auto neuron = detail::integer_neuron(params, out.config);
      bp["d_mem"] = Tensor(sh, std::vector<double>(neuron.d_mem.begin(), neuron.d_mem.end()));
      bp["d_syn"] = Tensor(sh, std::vector<double>(neuron.d_syn.begin(), neuron.d_syn.end()));
      bp["threshold"] = Tensor(sh, std::vector<double>(neuron.theta.begin(), neuron.theta.end()));
      bp["bias"] = Tensor(sh, std::vector<double>(neuron.bias.begin(), neuron.bias.end()));
      notes.push_back("decay approximated by integer bit shifts");
    }
    return out;
  }

  fail(ErrorCode::invalid_argument, "named translation covers lif and cuba_lif, not " +
                                        std::string(kind_name(kind_of(params))));
}

}  // namespace nir
