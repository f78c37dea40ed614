#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace balancereg {

// Dense row-major array of doubles. Scalars are 1x1, column vectors are n x 1.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor column(std::span<const double> values);
  static Tensor identity(std::size_t n);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool same_shape(const Tensor& other) const { return rows == other.rows && cols == other.cols; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double item() const;

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  std::string shape_string() const;
};

// Rows of `src` selected by `indices`, in that order.
Tensor take_rows(const Tensor& src, std::span<const std::size_t> indices);

}  // namespace balancereg
