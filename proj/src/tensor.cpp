#include "iadfp/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "iadfp/errors.hpp"

namespace iadfp {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_size(shape)) {
    throw ShapeError("Tensor: " + std::to_string(values.size()) + " values for shape " +
                     shape_string(shape));
  }
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

Tensor Tensor::reshaped(Shape s) const {
  if (shape_size(s) != size()) {
    throw ShapeError("reshape " + shape_string(shape) + " -> " + shape_string(s));
  }
  return Tensor(std::move(s), values);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t count) const {
  if (begin + count > rows()) throw ShapeError("slice_rows: range exceeds leading dimension");
  Shape s = shape;
  s[0] = count;
  const std::size_t stride = row_size();
  std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                        values.begin() + static_cast<std::ptrdiff_t>((begin + count) * stride));
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  Shape s = shape;
  s[0] = indices.size();
  const std::size_t stride = row_size();
  std::vector<double> v(indices.size() * stride);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(indices[i] * stride), stride,
                v.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return Tensor(std::move(s), std::move(v));
}

}  // namespace iadfp
