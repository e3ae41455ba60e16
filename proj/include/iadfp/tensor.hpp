#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace iadfp {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty, or same length as values

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const { return values.empty(); }

  /// Leading (batch) dimension; the rest is one example.
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t row_size() const { return rows() == 0 ? 0 : size() / rows(); }
  std::span<double> row(std::size_t i) { return {values.data() + i * row_size(), row_size()}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * row_size(), row_size()};
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  void zero_grad();
  /// Same data, new shape of equal size. Throws ShapeError otherwise.
  Tensor reshaped(Shape s) const;
  /// Rows [begin, begin + count) of the leading dimension.
  Tensor slice_rows(std::size_t begin, std::size_t count) const;
  /// Rows picked by index, in the given order.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.values == b.values;
  }
};

}  // namespace iadfp
