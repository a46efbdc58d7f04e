#include "wavae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wavae {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow on either tail.
double stable_logsigmoid(double x) {
  if (x >= 0.0) {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw std::runtime_error("tape: invalid var id " + std::to_string(v.id));
  }
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].grad;
}

Op Tape::op_of(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)].op;
}

Var Tape::leaf(Tensor t) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(t);
  return Var{push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "add");
  Node n;
  n.op = Op::Add;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = x;
  for (std::size_t i = 0; i < y.numel(); ++i) n.value.values[i] += y.values[i];
  return Var{push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "sub");
  Node n;
  n.op = Op::Sub;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = x;
  for (std::size_t i = 0; i < y.numel(); ++i) n.value.values[i] -= y.values[i];
  return Var{push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  require_same_shape(x, y, "mul");
  Node n;
  n.op = Op::Mul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = x;
  for (std::size_t i = 0; i < y.numel(); ++i) n.value.values[i] *= y.values[i];
  return Var{push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    throw std::runtime_error("matmul: shape mismatch " + shape_str(x.shape) + " vs " +
                             shape_str(y.shape));
  }
  const std::size_t p = x.rows(), q = x.cols(), r = y.cols();
  Node n;
  n.op = Op::MatMul;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = Tensor({p, r});
  const double* xa = x.values.data();
  const double* yb = y.values.data();
  double* out = n.value.values.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double xv = xa[i * q + k];
      if (xv == 0.0) continue;
      const double* yrow = yb + k * r;
      double* orow = out + i * r;
      for (std::size_t j = 0; j < r; ++j) orow[j] += xv * yrow[j];
    }
  }
  return Var{push(std::move(n))};
}

Var Tape::transpose(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.rank() != 2) {
    throw std::runtime_error("transpose: rank-2 required, got " + shape_str(x.shape));
  }
  Node n;
  n.op = Op::Transpose;
  n.in0 = a.id;
  n.value = Tensor({x.cols(), x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) n.value.at(j, i) = x.at(i, j);
  return Var{push(std::move(n))};
}

Var Tape::scale(Var a, double c) {
  check(a);
  Node n;
  n.op = Op::Scale;
  n.in0 = a.id;
  n.a = c;
  n.value = val(a.id);
  for (auto& v : n.value.values) v *= c;
  return Var{push(std::move(n))};
}

Var Tape::add_scalar(Var a, double c) {
  check(a);
  Node n;
  n.op = Op::AddScalar;
  n.in0 = a.id;
  n.a = c;
  n.value = val(a.id);
  for (auto& v : n.value.values) v += c;
  return Var{push(std::move(n))};
}

Var Tape::add_rowvec(Var a, Var v) {
  check(a);
  check(v);
  const Tensor& x = val(a.id);
  const Tensor& w = val(v.id);
  if (x.rank() != 2 || w.rank() != 1 || w.shape[0] != x.cols()) {
    throw std::runtime_error("add_rowvec: shape mismatch " + shape_str(x.shape) + " vs " +
                             shape_str(w.shape));
  }
  Node n;
  n.op = Op::AddRowVec;
  n.in0 = a.id;
  n.in1 = v.id;
  n.value = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) n.value.at(i, j) += w.values[j];
  return Var{push(std::move(n))};
}

Var Tape::exp(Var a) {
  check(a);
  Node n;
  n.op = Op::Exp;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = std::exp(v);
  return Var{push(std::move(n))};
}

Var Tape::log(Var a) {
  check(a);
  Node n;
  n.op = Op::Log;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) {
    if (!(v > 0.0)) {
      throw std::runtime_error("log: non-positive input " + std::to_string(v));
    }
    v = std::log(v);
  }
  return Var{push(std::move(n))};
}

Var Tape::tanh(Var a) {
  check(a);
  Node n;
  n.op = Op::Tanh;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = std::tanh(v);
  return Var{push(std::move(n))};
}

Var Tape::sigmoid(Var a) {
  check(a);
  Node n;
  n.op = Op::Sigmoid;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = stable_sigmoid(v);
  return Var{push(std::move(n))};
}

Var Tape::logsigmoid(Var a) {
  check(a);
  Node n;
  n.op = Op::LogSigmoid;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = stable_logsigmoid(v);
  return Var{push(std::move(n))};
}

Var Tape::relu(Var a) {
  check(a);
  Node n;
  n.op = Op::Relu;
  n.in0 = a.id;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = v > 0.0 ? v : 0.0;
  return Var{push(std::move(n))};
}

Var Tape::leaky_relu(Var a, double slope) {
  check(a);
  Node n;
  n.op = Op::LeakyRelu;
  n.in0 = a.id;
  n.a = slope;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = v > 0.0 ? v : slope * v;
  return Var{push(std::move(n))};
}

Var Tape::clamp(Var a, double lo, double hi) {
  check(a);
  Node n;
  n.op = Op::Clamp;
  n.in0 = a.id;
  n.a = lo;
  n.b = hi;
  n.value = val(a.id);
  for (auto& v : n.value.values) v = std::min(hi, std::max(lo, v));
  return Var{push(std::move(n))};
}

Var Tape::sum_all(Var a) {
  check(a);
  Node n;
  n.op = Op::SumAll;
  n.in0 = a.id;
  double s = 0.0;
  for (double v : val(a.id).values) s += v;
  n.value = Tensor::scalar(s);
  return Var{push(std::move(n))};
}

Var Tape::mean_all(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.numel() == 0) throw std::runtime_error("mean_all: empty tensor");
  Node n;
  n.op = Op::MeanAll;
  n.in0 = a.id;
  double s = 0.0;
  for (double v : x.values) s += v;
  n.value = Tensor::scalar(s / static_cast<double>(x.numel()));
  return Var{push(std::move(n))};
}

Var Tape::sum_rows(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.rank() != 2) {
    throw std::runtime_error("sum_rows: rank-2 required, got " + shape_str(x.shape));
  }
  Node n;
  n.op = Op::SumRows;
  n.in0 = a.id;
  n.value = Tensor({x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x.at(i, j);
    n.value.values[i] = s;
  }
  return Var{push(std::move(n))};
}

Var Tape::diag(Var a) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.rank() != 2 || x.rows() != x.cols()) {
    throw std::runtime_error("diag: square matrix required, got " + shape_str(x.shape));
  }
  Node n;
  n.op = Op::Diag;
  n.in0 = a.id;
  n.value = Tensor({x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i) n.value.values[i] = x.at(i, i);
  return Var{push(std::move(n))};
}

Var Tape::row_lse_masked(Var a, Tensor mask) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.rank() != 2) {
    throw std::runtime_error("row_lse_masked: rank-2 required, got " + shape_str(x.shape));
  }
  require_same_shape(x, mask, "row_lse_masked");
  Node n;
  n.op = Op::RowLseMasked;
  n.in0 = a.id;
  n.value = Tensor({x.rows()});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -HUGE_VAL;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask.at(i, j) != 0.0) mx = std::max(mx, x.at(i, j));
    }
    if (mx == -HUGE_VAL) {
      throw std::runtime_error("row_lse_masked: row " + std::to_string(i) + " fully masked");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask.at(i, j) != 0.0) s += std::exp(x.at(i, j) - mx);
    }
    n.value.values[i] = mx + std::log(s);
  }
  n.aux = std::move(mask);
  return Var{push(std::move(n))};
}

Var Tape::slice_cols(Var a, std::size_t j0, std::size_t j1) {
  check(a);
  const Tensor& x = val(a.id);
  if (x.rank() != 2 || j0 >= j1 || j1 > x.cols()) {
    throw std::runtime_error("slice_cols: invalid range [" + std::to_string(j0) + ", " +
                             std::to_string(j1) + ") for " + shape_str(x.shape));
  }
  Node n;
  n.op = Op::SliceCols;
  n.in0 = a.id;
  n.a = static_cast<double>(j0);
  n.b = static_cast<double>(j1);
  n.value = Tensor({x.rows(), j1 - j0});
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = j0; j < j1; ++j) n.value.at(i, j - j0) = x.at(i, j);
  return Var{push(std::move(n))};
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& x = val(a.id);
  const Tensor& y = val(b.id);
  if (x.rank() != 2 || y.rank() != 2 || x.rows() != y.rows()) {
    throw std::runtime_error("concat_cols: shape mismatch " + shape_str(x.shape) + " vs " +
                             shape_str(y.shape));
  }
  Node n;
  n.op = Op::ConcatCols;
  n.in0 = a.id;
  n.in1 = b.id;
  n.value = Tensor({x.rows(), x.cols() + y.cols()});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) n.value.at(i, j) = x.at(i, j);
    for (std::size_t j = 0; j < y.cols(); ++j) n.value.at(i, x.cols() + j) = y.at(i, j);
  }
  return Var{push(std::move(n))};
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad = Tensor();
}

void Tape::backward(Var root) {
  check(root);
  auto& rn = nodes_[static_cast<std::size_t>(root.id)];
  if (rn.value.numel() != 1) {
    throw std::runtime_error("backward: root must be scalar, got " + shape_str(rn.value.shape));
  }

  // Mark nodes reachable from root; creation order is already topological.
  std::vector<char> needed(nodes_.size(), 0);
  needed[static_cast<std::size_t>(root.id)] = 1;
  for (int id = root.id; id >= 0; --id) {
    if (!needed[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.in0 >= 0) needed[static_cast<std::size_t>(n.in0)] = 1;
    if (n.in1 >= 0) needed[static_cast<std::size_t>(n.in1)] = 1;
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (needed[id] && nodes_[id].grad.numel() == 0) {
      nodes_[id].grad = Tensor(nodes_[id].value.shape);
    }
  }

  for (auto& v : rn.grad.values) v += 1.0;

  for (int id = root.id; id >= 0; --id) {
    if (!needed[static_cast<std::size_t>(id)]) continue;
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = n.grad;
    Tensor* g0 = n.in0 >= 0 ? &nodes_[static_cast<std::size_t>(n.in0)].grad : nullptr;
    Tensor* g1 = n.in1 >= 0 ? &nodes_[static_cast<std::size_t>(n.in1)].grad : nullptr;
    const Tensor* v0 = n.in0 >= 0 ? &nodes_[static_cast<std::size_t>(n.in0)].value : nullptr;
    const Tensor* v1 = n.in1 >= 0 ? &nodes_[static_cast<std::size_t>(n.in1)].value : nullptr;

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          g0->values[i] += g.values[i];
          g1->values[i] += g.values[i];
        }
        break;
      case Op::Sub:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          g0->values[i] += g.values[i];
          g1->values[i] -= g.values[i];
        }
        break;
      case Op::Mul:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          g0->values[i] += g.values[i] * v1->values[i];
          g1->values[i] += g.values[i] * v0->values[i];
        }
        break;
      case Op::MatMul: {
        // C = A B: dA += g B^T, dB += A^T g
        const std::size_t p = v0->rows(), q = v0->cols(), r = v1->cols();
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < r; ++j) {
            const double gv = g.at(i, j);
            if (gv == 0.0) continue;
            for (std::size_t k = 0; k < q; ++k) {
              g0->values[i * q + k] += gv * v1->values[k * r + j];
              g1->values[k * r + j] += gv * v0->values[i * q + k];
            }
          }
        }
        break;
      }
      case Op::Transpose:
        for (std::size_t i = 0; i < n.value.rows(); ++i)
          for (std::size_t j = 0; j < n.value.cols(); ++j) g0->at(j, i) += g.at(i, j);
        break;
      case Op::Scale:
        for (std::size_t i = 0; i < g.numel(); ++i) g0->values[i] += n.a * g.values[i];
        break;
      case Op::AddScalar:
        for (std::size_t i = 0; i < g.numel(); ++i) g0->values[i] += g.values[i];
        break;
      case Op::AddRowVec: {
        for (std::size_t i = 0; i < g.numel(); ++i) g0->values[i] += g.values[i];
        const std::size_t cols = v0->cols();
        for (std::size_t i = 0; i < v0->rows(); ++i)
          for (std::size_t j = 0; j < cols; ++j) g1->values[j] += g.values[i * cols + j];
        break;
      }
      case Op::Exp:
        for (std::size_t i = 0; i < g.numel(); ++i) g0->values[i] += g.values[i] * n.value.values[i];
        break;
      case Op::Log:
        for (std::size_t i = 0; i < g.numel(); ++i) g0->values[i] += g.values[i] / v0->values[i];
        break;
      case Op::Tanh:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          const double t = n.value.values[i];
          g0->values[i] += g.values[i] * (1.0 - t * t);
        }
        break;
      case Op::Sigmoid:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          const double s = n.value.values[i];
          g0->values[i] += g.values[i] * s * (1.0 - s);
        }
        break;
      case Op::LogSigmoid:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          g0->values[i] += g.values[i] * stable_sigmoid(-v0->values[i]);
        }
        break;
      case Op::Relu:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          if (v0->values[i] > 0.0) g0->values[i] += g.values[i];
        }
        break;
      case Op::LeakyRelu:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          g0->values[i] += g.values[i] * (v0->values[i] > 0.0 ? 1.0 : n.a);
        }
        break;
      case Op::Clamp:
        for (std::size_t i = 0; i < g.numel(); ++i) {
          const double x = v0->values[i];
          if (x >= n.a && x <= n.b) g0->values[i] += g.values[i];
        }
        break;
      case Op::SumAll:
        for (std::size_t i = 0; i < g0->numel(); ++i) g0->values[i] += g.values[0];
        break;
      case Op::MeanAll: {
        const double w = g.values[0] / static_cast<double>(g0->numel());
        for (std::size_t i = 0; i < g0->numel(); ++i) g0->values[i] += w;
        break;
      }
      case Op::SumRows: {
        const std::size_t cols = v0->cols();
        for (std::size_t i = 0; i < v0->rows(); ++i)
          for (std::size_t j = 0; j < cols; ++j) g0->values[i * cols + j] += g.values[i];
        break;
      }
      case Op::Diag:
        for (std::size_t i = 0; i < n.value.numel(); ++i) g0->at(i, i) += g.values[i];
        break;
      case Op::RowLseMasked: {
        // d lse_i / d x_ij = softmax weight within the masked row
        for (std::size_t i = 0; i < v0->rows(); ++i) {
          const double gi = g.values[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < v0->cols(); ++j) {
            if (n.aux.at(i, j) != 0.0) {
              g0->at(i, j) += gi * std::exp(v0->at(i, j) - n.value.values[i]);
            }
          }
        }
        break;
      }
      case Op::SliceCols: {
        const auto j0 = static_cast<std::size_t>(n.a);
        for (std::size_t i = 0; i < n.value.rows(); ++i)
          for (std::size_t j = 0; j < n.value.cols(); ++j) g0->at(i, j0 + j) += g.at(i, j);
        break;
      }
      case Op::ConcatCols: {
        const std::size_t c0 = v0->cols();
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
          for (std::size_t j = 0; j < c0; ++j) g0->at(i, j) += g.at(i, j);
          for (std::size_t j = 0; j < v1->cols(); ++j) g1->at(i, j) += g.at(i, c0 + j);
        }
        break;
      }
    }
  }
}

}  // namespace wavae
