#include "balancereg/tensor.hpp"

#include "balancereg/errors.hpp"

namespace balancereg {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) {
    throw DimensionError("tensor data of length " + std::to_string(data.size()) +
                         " does not fill shape " + shape_string());
  }
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

double Tensor::item() const {
  if (!is_scalar()) throw DimensionError("item() on non-scalar tensor " + shape_string());
  return data[0];
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor take_rows(const Tensor& src, std::span<const std::size_t> indices) {
  Tensor out(indices.size(), src.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= src.rows) {
      throw DimensionError("row index " + std::to_string(indices[i]) + " out of range for " +
                           src.shape_string());
    }
    auto from = src.row(indices[i]);
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace balancereg
