#include "wavae/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wavae {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << ")";
  return os.str();
}

std::size_t numel_of(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

Tensor::Tensor(Shape s) : shape(std::move(s)), values(numel_of(shape), 0.0) {}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(numel_of(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (numel_of(shape) != values.size()) {
    throw std::runtime_error("tensor: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
  }
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::runtime_error("tensor: rows() on rank-" + std::to_string(rank()) + " tensor");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::runtime_error("tensor: cols() on rank-" + std::to_string(rank()) + " tensor");
  return shape[1];
}

double& Tensor::at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
double Tensor::at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }

double& Tensor::at3(std::size_t i, std::size_t j, std::size_t k) {
  return values[(i * shape[1] + j) * shape[2] + k];
}
double Tensor::at3(std::size_t i, std::size_t j, std::size_t k) const {
  return values[(i * shape[1] + j) * shape[2] + k];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw std::runtime_error("tensor: item() on non-scalar " + shape_str(shape));
  }
  return values[0];
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (auto& x : values) x = v;
}

Tensor Tensor::reshaped(Shape s) const {
  if (numel_of(s) != numel()) {
    throw std::runtime_error("tensor: cannot reshape " + shape_str(shape) + " to " + shape_str(s));
  }
  return Tensor(std::move(s), values);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!same_shape(a, b)) {
    throw std::runtime_error(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
  }
}

}  // namespace wavae
