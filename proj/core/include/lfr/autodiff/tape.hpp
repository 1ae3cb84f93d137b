#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lfr/nets/activation.hpp"

namespace lfr::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Registered primitives. Every tape node is one of these; backward rules
/// exist for all of them.
enum class Primitive {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Square,
  Sum,
  Mean,
  AddBias,
  Activation,
  Slice,
  Segment,
  InverseSpectrum,
  Concat,
};

std::string_view primitive_name(Primitive p);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives
/// and has not been cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Scalar value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Layout of a packed forward-mode batch: block 0 holds primal values and
/// each differentiated input axis adds a first-order tangent block and,
/// when `order == 2`, a second-order (diagonal) tangent block. Every block
/// has `points` columns.
struct TangentLayout {
  struct Axis {
    int dim = 0;
    int order = 1;
    int first_block = 0;
    int second_block = -1;
  };

  std::size_t points = 0;
  std::vector<Axis> axes;

  TangentLayout() = default;
  TangentLayout(std::size_t points, const std::vector<std::pair<int, int>>& dims_and_orders);

  int blocks() const;
};

/// Reverse-mode tape over matrix-valued nodes. Nodes are appended in
/// topological order; `backward` walks them once in reverse. Values are
/// checked for finiteness when recorded so a NaN in a residual is reported
/// at the primitive that produced it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Matrix value);
  Var constant(Matrix value);

  const Matrix& value(const Var& v) const { return nodes_[v.index_].value; }
  /// Gradient of the last backward() output w.r.t. `v`; zeros when `v` has
  /// no path to the output.
  Matrix grad(const Var& v) const;

  void backward(const Var& scalar_output);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  /// Appends a node. Only the free functions below call this.
  Var record(Primitive op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward);

  const Matrix& node_grad(std::size_t i) const { return nodes_[i].grad; }
  const Matrix& node_value(std::size_t i) const { return nodes_[i].value; }
  std::size_t parent(std::size_t node, std::size_t k) const { return nodes_[node].parents[k]; }
  /// Accumulates `g` into the gradient of node `i`, allocating on first use.
  void accumulate(std::size_t i, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(std::size_t i, const Expr& g) {
    auto& node = nodes_[i];
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }
  bool requires_grad(std::size_t i) const { return nodes_[i].op != Primitive::Constant; }

 private:
  friend class Var;
  struct Node {
    Primitive op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// -- primitives ---------------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise product.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var square(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
/// Adds column vector `b` to columns [0, cols) of `a`.
Var add_bias(const Var& a, const Var& b, Eigen::Index cols);
/// Columns [first, first+count) of `a`.
Var slice_cols(const Var& a, Eigen::Index first, Eigen::Index count);
/// [a b] side by side; rows must agree.
Var concat_cols(const Var& a, const Var& b);
/// Elements [offset, offset+rows*cols) of column vector `flat`, read
/// row-major into a rows x cols matrix.
Var segment(const Var& flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
/// Fused activation over a packed tangent batch: propagates primal, first
/// and second tangents through the activation (chain rule per block).
Var activate(const Var& packed, nets::Activation act, const TangentLayout& layout);
/// Real weights from the first p complex DFT coefficients (re, im are p x 1):
/// w_n = gain/N * Re sum_{k<p} (re_k + i im_k) e^{2 pi i k n / N}.
Var inverse_spectrum(const Var& re, const Var& im, Eigen::Index n, double gain);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// -- drivers ------------------------------------------------------------------

struct ValueAndGradient {
  double value = 0.0;
  Vector gradient;
};

/// Value and gradient of a scalar function of a flat parameter vector.
ValueAndGradient grad(const std::function<Var(Tape&, const Var& params)>& loss_fn,
                      const Vector& params);

}  // namespace lfr::ad
