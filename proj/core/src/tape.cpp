#include "lfr/autodiff/tape.hpp"

#include <sstream>
#include <string>
#include <utility>

#include "lfr/errors.hpp"
#include "lfr/spectral/fft.hpp"

namespace lfr::ad {

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Leaf: return "leaf";
    case Primitive::Constant: return "constant";
    case Primitive::MatMul: return "matmul";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "sub";
    case Primitive::Mul: return "mul";
    case Primitive::Scale: return "scale";
    case Primitive::Square: return "square";
    case Primitive::Sum: return "sum";
    case Primitive::Mean: return "mean";
    case Primitive::AddBias: return "add_bias";
    case Primitive::Activation: return "activation";
    case Primitive::Slice: return "slice";
    case Primitive::Segment: return "segment";
    case Primitive::InverseSpectrum: return "inverse_spectrum";
    case Primitive::Concat: return "concat";
  }
  throw std::logic_error("unregistered primitive");
}

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on a non-1x1 node");
  return v(0, 0);
}

TangentLayout::TangentLayout(std::size_t pts, const std::vector<std::pair<int, int>>& dims_and_orders)
    : points(pts) {
  int next = 1;
  for (const auto& [dim, order] : dims_and_orders) {
    if (order < 1 || order > 2) throw ConfigError("input derivative order must be 1 or 2");
    Axis a;
    a.dim = dim;
    a.order = order;
    a.first_block = next++;
    if (order == 2) a.second_block = next++;
    axes.push_back(a);
  }
}

int TangentLayout::blocks() const {
  int b = 1;
  for (const auto& a : axes) b += a.order;
  return b;
}

Var Tape::variable(Matrix value) {
  return record(Primitive::Leaf, std::move(value), {}, nullptr);
}

Var Tape::constant(Matrix value) {
  return record(Primitive::Constant, std::move(value), {}, nullptr);
}

Var Tape::record(Primitive op, Matrix value, std::vector<std::size_t> parents, BackwardFn backward) {
  (void)primitive_name(op);
  if (!value.allFinite()) {
    std::ostringstream os;
    os << "non-finite value produced by node #" << nodes_.size() << " (" << primitive_name(op) << ", "
       << value.rows() << "x" << value.cols() << ")";
    throw NumericalError(os.str());
  }
  nodes_.push_back(Node{op, std::move(value), Matrix(), std::move(parents), std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t i, const Matrix& g) {
  auto& node = nodes_[i];
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

Matrix Tape::grad(const Var& v) const {
  const auto& node = nodes_[v.index_];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(const Var& out) {
  if (out.tape_ != this) throw std::logic_error("backward() on a Var from another tape");
  if (value(out).size() != 1) throw ShapeError("backward() needs a scalar output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[out.index_].grad = Matrix::Ones(1, 1);
  for (std::size_t i = out.index_ + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, i);
  }
}

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw std::logic_error("Vars from different tapes");
  return *a.tape();
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw ShapeError(os.str());
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) {
    std::ostringstream os;
    os << "matmul: " << a.rows() << "x" << a.cols() << " times " << b.rows() << "x" << b.cols();
    throw ShapeError(os.str());
  }
  Matrix v = a.value() * b.value();
  return t.record(Primitive::MatMul, std::move(v), {a.index(), b.index()}, [](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    const std::size_t pa = tp.parent(self, 0);
    const std::size_t pb = tp.parent(self, 1);
    if (tp.requires_grad(pa)) tp.accumulate_expr(pa, g * tp.node_value(pb).transpose());
    if (tp.requires_grad(pb)) tp.accumulate_expr(pb, tp.node_value(pa).transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a, b, "add");
  Matrix v = a.value() + b.value();
  return t.record(Primitive::Add, std::move(v), {a.index(), b.index()}, [](Tape& tp, std::size_t self) {
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t p = tp.parent(self, k);
      if (tp.requires_grad(p)) tp.accumulate(p, tp.node_grad(self));
    }
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a, b, "sub");
  Matrix v = a.value() - b.value();
  return t.record(Primitive::Sub, std::move(v), {a.index(), b.index()}, [](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    const std::size_t pb = tp.parent(self, 1);
    if (tp.requires_grad(pa)) tp.accumulate(pa, tp.node_grad(self));
    if (tp.requires_grad(pb)) tp.accumulate_expr(pb, -tp.node_grad(self));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  check_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return t.record(Primitive::Mul, std::move(v), {a.index(), b.index()}, [](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    const std::size_t pa = tp.parent(self, 0);
    const std::size_t pb = tp.parent(self, 1);
    if (tp.requires_grad(pa)) tp.accumulate_expr(pa, g.cwiseProduct(tp.node_value(pb)));
    if (tp.requires_grad(pb)) tp.accumulate_expr(pb, g.cwiseProduct(tp.node_value(pa)));
  });
}

Var scale(const Var& a, double s) {
  Tape& t = *a.tape();
  Matrix v = s * a.value();
  return t.record(Primitive::Scale, std::move(v), {a.index()}, [s](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (tp.requires_grad(pa)) tp.accumulate_expr(pa, s * tp.node_grad(self));
  });
}

Var square(const Var& a) {
  Tape& t = *a.tape();
  Matrix v = a.value().array().square().matrix();
  return t.record(Primitive::Square, std::move(v), {a.index()}, [](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (tp.requires_grad(pa)) tp.accumulate_expr(pa, 2.0 * tp.node_grad(self).cwiseProduct(tp.node_value(pa)));
  });
}

Var sum(const Var& a) {
  Tape& t = *a.tape();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return t.record(Primitive::Sum, std::move(v), {a.index()}, [](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (!tp.requires_grad(pa)) return;
    const Matrix& av = tp.node_value(pa);
    tp.accumulate_expr(pa, Matrix::Constant(av.rows(), av.cols(), tp.node_grad(self)(0, 0)));
  });
}

Var mean(const Var& a) {
  Tape& t = *a.tape();
  if (a.value().size() == 0) throw ShapeError("mean of an empty node");
  Matrix v(1, 1);
  v(0, 0) = a.value().mean();
  return t.record(Primitive::Mean, std::move(v), {a.index()}, [](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (!tp.requires_grad(pa)) return;
    const Matrix& av = tp.node_value(pa);
    const double g = tp.node_grad(self)(0, 0) / static_cast<double>(av.size());
    tp.accumulate_expr(pa, Matrix::Constant(av.rows(), av.cols(), g));
  });
}

Var add_bias(const Var& a, const Var& b, Eigen::Index cols) {
  Tape& t = same_tape(a, b);
  if (b.cols() != 1 || b.rows() != a.rows() || cols > a.cols()) throw ShapeError("add_bias: shape mismatch");
  Matrix v = a.value();
  v.leftCols(cols).colwise() += b.value().col(0);
  return t.record(Primitive::AddBias, std::move(v), {a.index(), b.index()}, [cols](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    const std::size_t pa = tp.parent(self, 0);
    const std::size_t pb = tp.parent(self, 1);
    if (tp.requires_grad(pa)) tp.accumulate(pa, g);
    if (tp.requires_grad(pb)) tp.accumulate_expr(pb, g.leftCols(cols).rowwise().sum());
  });
}

Var slice_cols(const Var& a, Eigen::Index first, Eigen::Index count) {
  Tape& t = *a.tape();
  if (first < 0 || count < 0 || first + count > a.cols()) throw ShapeError("slice_cols: out of range");
  Matrix v = a.value().middleCols(first, count);
  return t.record(Primitive::Slice, std::move(v), {a.index()}, [first, count](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (!tp.requires_grad(pa)) return;
    const Matrix& av = tp.node_value(pa);
    Matrix g = Matrix::Zero(av.rows(), av.cols());
    g.middleCols(first, count) = tp.node_grad(self);
    tp.accumulate(pa, g);
  });
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row counts differ");
  const Eigen::Index ca = a.cols();
  Matrix v(a.rows(), ca + b.cols());
  v << a.value(), b.value();
  return t.record(Primitive::Concat, std::move(v), {a.index(), b.index()}, [ca](Tape& tp, std::size_t self) {
    const Matrix& g = tp.node_grad(self);
    const std::size_t pa = tp.parent(self, 0);
    const std::size_t pb = tp.parent(self, 1);
    if (tp.requires_grad(pa)) tp.accumulate_expr(pa, g.leftCols(ca));
    if (tp.requires_grad(pb)) tp.accumulate_expr(pb, g.rightCols(g.cols() - ca));
  });
}

Var segment(const Var& flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  Tape& t = *flat.tape();
  if (flat.cols() != 1) throw ShapeError("segment: source must be a column vector");
  if (offset < 0 || offset + rows * cols > flat.rows()) throw ShapeError("segment: out of range");
  Matrix v(rows, cols);
  const Matrix& src = flat.value();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) v(r, c) = src(offset + r * cols + c, 0);
  }
  return t.record(Primitive::Segment, std::move(v), {flat.index()}, [offset, rows, cols](Tape& tp, std::size_t self) {
    const std::size_t pa = tp.parent(self, 0);
    if (!tp.requires_grad(pa)) return;
    const Matrix& g = tp.node_grad(self);
    Matrix acc = Matrix::Zero(tp.node_value(pa).rows(), 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) acc(offset + r * cols + c, 0) = g(r, c);
    }
    tp.accumulate(pa, acc);
  });
}

Var activate(const Var& packed, nets::Activation act, const TangentLayout& layout) {
  Tape& t = *packed.tape();
  const auto m = static_cast<Eigen::Index>(layout.points);
  if (packed.cols() != m * layout.blocks()) throw ShapeError("activate: packed columns do not match layout");
  const Matrix& z = packed.value();
  const Eigen::Index rows = z.rows();

  // Jets of the primal block are needed by the backward pass; keep them.
  auto d1 = std::make_shared<Matrix>(rows, m);
  auto d2 = std::make_shared<Matrix>(rows, m);
  auto d3 = std::make_shared<Matrix>(rows, m);
  Matrix out(rows, z.cols());
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto j = nets::activation_jet(act, z(r, c));
      out(r, c) = j.f;
      (*d1)(r, c) = j.d1;
      (*d2)(r, c) = j.d2;
      (*d3)(r, c) = j.d3;
    }
  }
  for (const auto& ax : layout.axes) {
    const auto z1 = z.middleCols(ax.first_block * m, m).array();
    out.middleCols(ax.first_block * m, m) = (d1->array() * z1).matrix();
    if (ax.second_block >= 0) {
      const auto z2 = z.middleCols(ax.second_block * m, m).array();
      out.middleCols(ax.second_block * m, m) = (d2->array() * z1.square() + d1->array() * z2).matrix();
    }
  }

  return t.record(Primitive::Activation, std::move(out), {packed.index()},
                  [layout, m, d1, d2, d3](Tape& tp, std::size_t self) {
                    const std::size_t pa = tp.parent(self, 0);
                    if (!tp.requires_grad(pa)) return;
                    const Matrix& g = tp.node_grad(self);
                    const Matrix& zz = tp.node_value(pa);
                    Matrix gz(zz.rows(), zz.cols());
                    gz.leftCols(m) = (g.leftCols(m).array() * d1->array()).matrix();
                    for (const auto& ax : layout.axes) {
                      const auto z1 = zz.middleCols(ax.first_block * m, m).array();
                      const auto g1 = g.middleCols(ax.first_block * m, m).array();
                      gz.leftCols(m).array() += g1 * d2->array() * z1;
                      gz.middleCols(ax.first_block * m, m) = (g1 * d1->array()).matrix();
                      if (ax.second_block >= 0) {
                        const auto z2 = zz.middleCols(ax.second_block * m, m).array();
                        const auto g2 = g.middleCols(ax.second_block * m, m).array();
                        gz.leftCols(m).array() += g2 * (d3->array() * z1.square() + d2->array() * z2);
                        gz.middleCols(ax.first_block * m, m).array() += 2.0 * g2 * d2->array() * z1;
                        gz.middleCols(ax.second_block * m, m) = (g2 * d1->array()).matrix();
                      }
                    }
                    tp.accumulate(pa, gz);
                  });
}

Var inverse_spectrum(const Var& re, const Var& im, Eigen::Index n, double gain) {
  Tape& t = same_tape(re, im);
  if (re.cols() != 1 || im.cols() != 1 || re.rows() != im.rows()) throw ShapeError("inverse_spectrum: re/im must be p x 1");
  const Eigen::Index p = re.rows();
  if (p < 1 || p > n) throw ShapeError("inverse_spectrum: need 1 <= p <= N");
  const auto un = static_cast<std::size_t>(n);
  const double factor = gain / static_cast<double>(n);

  std::vector<spectral::Complex> buf(un, {0.0, 0.0});
  for (Eigen::Index k = 0; k < p; ++k) buf[static_cast<std::size_t>(k)] = {re.value()(k, 0), im.value()(k, 0)};
  spectral::plan_for(un).inverse(buf);
  Matrix w(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) w(i, 0) = factor * buf[static_cast<std::size_t>(i)].real();

  return t.record(Primitive::InverseSpectrum, std::move(w), {re.index(), im.index()},
                  [n, p, factor](Tape& tp, std::size_t self) {
                    const auto un = static_cast<std::size_t>(n);
                    const Matrix& g = tp.node_grad(self);
                    // d w_n / d re_k = f cos, d w_n / d im_k = -f sin; both
                    // read off the forward DFT of the upstream gradient.
                    std::vector<spectral::Complex> gb(un);
                    for (std::size_t i = 0; i < un; ++i) gb[i] = {g(static_cast<Eigen::Index>(i), 0), 0.0};
                    spectral::plan_for(un).forward(gb);
                    Matrix gre(p, 1);
                    Matrix gim(p, 1);
                    for (Eigen::Index k = 0; k < p; ++k) {
                      gre(k, 0) = factor * gb[static_cast<std::size_t>(k)].real();
                      gim(k, 0) = factor * gb[static_cast<std::size_t>(k)].imag();
                    }
                    const std::size_t pr = tp.parent(self, 0);
                    const std::size_t pi = tp.parent(self, 1);
                    if (tp.requires_grad(pr)) tp.accumulate(pr, gre);
                    if (tp.requires_grad(pi)) tp.accumulate(pi, gim);
                  });
}

ValueAndGradient grad(const std::function<Var(Tape&, const Var& params)>& loss_fn, const Vector& params) {
  if (!params.allFinite()) throw NumericalError("grad: non-finite parameter");
  Tape tape;
  Var p = tape.variable(params);
  Var out = loss_fn(tape, p);
  tape.backward(out);
  ValueAndGradient r;
  r.value = out.scalar();
  r.gradient = tape.grad(p).col(0);
  return r;
}

}  // namespace lfr::ad
