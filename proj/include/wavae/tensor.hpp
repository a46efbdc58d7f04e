#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace wavae {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

/// Dense row-major tensor of 64-bit floats. Shapes are dynamic; rank 1 and 2
/// cover everything the model needs, rank 3 is used for window batches.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s);
  Tensor(Shape s, double fill);
  Tensor(Shape s, std::vector<double> v);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t numel() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }

  // rank-2 accessors
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;

  // rank-3 accessor (batch, time, channel)
  double& at3(std::size_t i, std::size_t j, std::size_t k);
  double at3(std::size_t i, std::size_t j, std::size_t k) const;

  double item() const;  // numel()==1 or throws

  bool all_finite() const;
  void fill(double v);

  /// Same values, new shape; numel must be preserved.
  Tensor reshaped(Shape s) const;
};

std::size_t numel_of(const Shape& s);
bool same_shape(const Tensor& a, const Tensor& b);

/// Throws std::runtime_error naming both shapes if they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace wavae
