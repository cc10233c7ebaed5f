#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nir/error.hpp"

namespace nir {

// Ordered list of positive extents. An empty shape marks an extent that has
// not been resolved yet (see infer_shapes); it never describes a scalar.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  bool resolved() const noexcept { return !dims_.empty(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }

  std::size_t numel() const noexcept {
    if (dims_.empty()) return 0;
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                           std::multiplies<>{});
  }

  // All extents >= 1 and at least one axis.
  bool well_formed() const noexcept {
    return !dims_.empty() &&
           std::all_of(dims_.begin(), dims_.end(), [](std::size_t d) { return d >= 1; });
  }

  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(dims_[i]);
    }
    return out + "]";
  }

  friend bool operator==(const Shape&, const Shape&) = default;
  friend auto operator<=>(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.numel() != data_.size()) {
      fail(ErrorCode::shape_mismatch, "tensor of shape " + shape_.to_string() +
                                          " cannot hold " + std::to_string(data_.size()) +
                                          " values");
    }
  }

  static Tensor full(Shape shape, double value) {
    const std::size_t n = shape.numel();
    return Tensor(std::move(shape), std::vector<double>(n, value));
  }
  static Tensor zeros(Shape shape) { return full(std::move(shape), 0.0); }

  static Tensor vector(std::vector<double> values) {
    Shape shape{values.size()};
    return Tensor(std::move(shape), std::move(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
  }

  static Tensor identity(std::size_t n) {
    Tensor t = zeros(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
  }

  static Tensor diagonal(std::span<const double> diag) {
    const std::size_t n = diag.size();
    Tensor t = zeros(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = diag[i];
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_.at(i); }

  // Row-major element access for rank-2 tensors.
  double at(std::size_t row, std::size_t col) const {
    return data_[row * shape_[1] + col];
  }

  Tensor reshaped(Shape shape) const {
    if (shape.numel() != data_.size()) {
      fail(ErrorCode::shape_mismatch,
           "cannot reshape " + shape_.to_string() + " to " + shape.to_string());
    }
    return Tensor(std::move(shape), data_);
  }

  // Bitwise comparison so that -0.0 and 0.0 (which serialize differently)
  // are distinct, and NaN payloads compare equal to themselves.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    if (a.shape_ != b.shape_) return false;
    return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), b.data_.end(),
                      [](double x, double y) {
                        return std::bit_cast<std::uint64_t>(x) ==
                               std::bit_cast<std::uint64_t>(y);
                      });
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) fail(ErrorCode::invalid_argument, "unformattable number");
  return std::string(buffer, end);
}

inline bool all_of(const Tensor& t, const std::function<bool(double)>& pred) {
  return std::all_of(t.data().begin(), t.data().end(), pred);
}

}  // namespace nir
