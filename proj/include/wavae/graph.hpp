#pragma once

#include <cstdint>
#include <vector>

#include "wavae/tensor.hpp"

namespace wavae {

/// Handle into a Tape. Cheap to copy; only valid for the tape that issued it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  MatMul,
  Transpose,
  Scale,
  AddScalar,
  AddRowVec,
  Exp,
  Log,
  Tanh,
  Sigmoid,
  LogSigmoid,
  Relu,
  LeakyRelu,
  Clamp,
  SumAll,
  MeanAll,
  SumRows,
  Diag,
  RowLseMasked,
  SliceCols,
  ConcatCols,
};

/// Define-by-run reverse-mode tape over Tensors. Forward values are computed
/// eagerly as nodes are appended; node creation order is a topological order,
/// so backward() is a single reverse sweep. A tape is built per batch and
/// discarded; gradients accumulate (call zero_grad() before reusing a graph).
class Tape {
 public:
  Var leaf(Tensor t);
  Var constant(Tensor t) { return leaf(std::move(t)); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var neg(Var a) { return scale(a, -1.0); }
  /// a is (b, n), v is a length-n vector broadcast over rows.
  Var add_rowvec(Var a, Var v);

  Var exp(Var a);
  /// Strictly positive input required; compose with clamp() at the call site.
  Var log(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var logsigmoid(Var a);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  /// Pass-through gradient inside [lo, hi], zero where the value was pinned.
  Var clamp(Var a, double lo, double hi);

  Var sum_all(Var a);
  Var mean_all(Var a);
  /// (b, n) -> length-b vector of row sums.
  Var sum_rows(Var a);
  /// (n, n) -> length-n diagonal.
  Var diag(Var a);
  /// Row-wise log-sum-exp over entries where mask != 0 (max-subtracted).
  /// mask is captured by value and treated as a constant.
  Var row_lse_masked(Var a, Tensor mask);
  Var slice_cols(Var a, std::size_t j0, std::size_t j1);
  Var concat_cols(Var a, Var b);

  /// Seeds d(root)/d(root)=1 and accumulates gradients into every node on a
  /// path to root. Root must be scalar-valued.
  void backward(Var root);
  void zero_grad();

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  double scalar(Var v) const { return value(v).item(); }

  std::size_t size() const { return nodes_.size(); }
  Op op_of(Var v) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    int in0 = -1, in1 = -1;
    double a = 0.0, b = 0.0;  // op attributes (scale factor, clamp bounds, slice range, slope)
    Tensor value;
    Tensor grad;
    Tensor aux;  // RowLseMasked: mask
  };

  int push(Node n);
  const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  void check(Var v) const;
  std::vector<Node> nodes_;
};

}  // namespace wavae
