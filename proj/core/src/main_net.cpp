#include "lfr/nets/main_net.hpp"

#include <sstream>
#include <string>

#include "lfr/errors.hpp"

namespace lfr::nets {

std::vector<LayerShape> MainNetArch::layers() const {
  validate();
  std::vector<LayerShape> out;
  out.push_back({width, in_dim, true});
  for (int i = 1; i < hidden_layers; ++i) out.push_back({width, width, true});
  out.push_back({out_dim, width, false});
  return out;
}

Eigen::Index MainNetArch::total_weights() const {
  Eigen::Index n = 0;
  for (const auto& s : layers()) n += s.n_weights();
  return n;
}

void MainNetArch::validate() const {
  if (in_dim < 1 || width < 1 || hidden_layers < 1 || out_dim < 1) {
    throw ConfigError("main network needs in_dim, width, hidden_layers, out_dim >= 1");
  }
}

Eigen::VectorXd LayerWeights::flatten() const {
  Eigen::VectorXd flat(shape().n_weights());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) flat[k++] = w(r, c);
  }
  for (Eigen::Index r = 0; r < b.size(); ++r) flat[k++] = b[r];
  return flat;
}

LayerWeights LayerWeights::unflatten(const LayerShape& shape, const Eigen::VectorXd& flat) {
  if (flat.size() != shape.n_weights()) throw ShapeError("unflatten: length does not match layer shape");
  LayerWeights lw;
  lw.w.resize(shape.out, shape.in);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < shape.out; ++r) {
    for (Eigen::Index c = 0; c < shape.in; ++c) lw.w(r, c) = flat[k++];
  }
  if (shape.bias) {
    lw.b.resize(shape.out);
    for (Eigen::Index r = 0; r < shape.out; ++r) lw.b[r] = flat[k++];
  }
  return lw;
}

void MainNetWeights::validate() const {
  if (layers.size() < 2) throw ShapeError("main network needs at least 2 layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lw = layers[l];
    if (lw.has_bias() && lw.b.size() != lw.w.rows()) throw ShapeError("bias length differs from layer output dim");
    if (l + 1 < layers.size() && layers[l + 1].w.cols() != lw.w.rows()) {
      std::ostringstream os;
      os << "layer " << l << " outputs " << lw.w.rows() << " but layer " << l + 1 << " expects " << layers[l + 1].w.cols();
      throw ShapeError(os.str());
    }
    if (!lw.w.allFinite() || !lw.b.allFinite()) throw ShapeError("non-finite weight in layer " + std::to_string(l));
  }
  if (layers.back().has_bias()) throw ShapeError("final layer must be bias-free");
}

std::vector<LayerShape> MainNetWeights::shapes() const {
  std::vector<LayerShape> s;
  for (const auto& l : layers) s.push_back(l.shape());
  return s;
}

MainNetWeights MainNetWeights::zeros(const MainNetArch& arch) {
  MainNetWeights mw;
  for (const auto& s : arch.layers()) {
    LayerWeights lw;
    lw.w = Eigen::MatrixXd::Zero(s.out, s.in);
    if (s.bias) lw.b = Eigen::VectorXd::Zero(s.out);
    mw.layers.push_back(std::move(lw));
  }
  return mw;
}

Eigen::MatrixXd main_net_forward_batch(const Eigen::MatrixXd& x, const MainNetWeights& weights, Activation act) {
  if (weights.layers.empty() || x.rows() != weights.input_dim()) {
    throw ShapeError("main_net_forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(weights.layers.empty() ? 0 : weights.input_dim()));
  }
  Eigen::MatrixXd h = x;
  const std::size_t last = weights.layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    const auto& lw = weights.layers[l];
    Eigen::MatrixXd z = lw.w * h;
    if (lw.has_bias()) z.colwise() += lw.b;
    h = z.unaryExpr([act](double v) { return activation_apply(act, v); });
  }
  Eigen::MatrixXd u = weights.layers[last].w * h;
  if (weights.layers[last].has_bias()) u.colwise() += weights.layers[last].b;
  return u;
}

Eigen::VectorXd main_net_forward(const Eigen::VectorXd& x, const MainNetWeights& weights, Activation act) {
  return main_net_forward_batch(x, weights, act).col(0);
}

ad::DualValue main_net_dual(const Eigen::VectorXd& x, const MainNetWeights& weights, Activation act, int dim) {
  if (dim < 0 || dim >= x.size()) throw ShapeError("main_net_dual: axis out of range");
  if (x.size() != weights.input_dim()) throw ShapeError("main_net_dual: input dimension mismatch");
  std::vector<ad::DualValue> h(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    h[static_cast<std::size_t>(i)] = i == dim ? ad::DualValue::variable(x[i]) : ad::DualValue::constant(x[i]);
  }
  const std::size_t last = weights.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const auto& lw = weights.layers[l];
    std::vector<ad::DualValue> z(static_cast<std::size_t>(lw.w.rows()));
    for (Eigen::Index r = 0; r < lw.w.rows(); ++r) {
      ad::DualValue acc = ad::DualValue::constant(lw.has_bias() ? lw.b[r] : 0.0);
      for (Eigen::Index c = 0; c < lw.w.cols(); ++c) acc = acc + lw.w(r, c) * h[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = l == last ? acc : ad::apply(act, acc);
    }
    h = std::move(z);
  }
  return h.front();
}

std::vector<LayerVars> weights_on_tape(ad::Tape& tape, const MainNetWeights& weights, bool trainable) {
  std::vector<LayerVars> out;
  for (const auto& lw : weights.layers) {
    LayerVars lv;
    lv.w = trainable ? tape.variable(lw.w) : tape.constant(lw.w);
    if (lw.has_bias()) lv.b = trainable ? tape.variable(lw.b) : tape.constant(lw.b);
    out.push_back(lv);
  }
  return out;
}

const ad::Var& NetDerivs::d1(int dim) const {
  const auto& v = first.at(static_cast<std::size_t>(dim));
  if (!v.valid()) throw std::logic_error("first derivative along axis " + std::to_string(dim) + " was not requested");
  return v;
}

const ad::Var& NetDerivs::d2(int dim) const {
  const auto& v = second.at(static_cast<std::size_t>(dim));
  if (!v.valid()) throw std::logic_error("second derivative along axis " + std::to_string(dim) + " was not requested");
  return v;
}

NetDerivs forward_with_derivs(ad::Tape& tape, const std::vector<LayerVars>& layers, const Eigen::MatrixXd& x,
                              const std::vector<std::pair<int, int>>& axes, Activation act) {
  if (layers.size() < 2) throw ShapeError("main network needs at least 2 layers");
  const Eigen::Index in_dim = layers.front().w.cols();
  if (x.rows() != in_dim) throw ShapeError("forward_with_derivs: input dimension mismatch");
  for (const auto& [dim, order] : axes) {
    if (dim < 0 || dim >= in_dim) throw ShapeError("forward_with_derivs: axis out of range");
    (void)order;
  }
  const Eigen::Index m = x.cols();
  const ad::TangentLayout layout(static_cast<std::size_t>(m), axes);
  const Eigen::Index blocks = layout.blocks();

  Eigen::MatrixXd packed = Eigen::MatrixXd::Zero(in_dim, blocks * m);
  packed.leftCols(m) = x;
  for (const auto& ax : layout.axes) packed.row(ax.dim).segment(ax.first_block * m, m).setOnes();

  ad::Var h = tape.constant(std::move(packed));
  const std::size_t last = layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    ad::Var z = ad::matmul(layers[l].w, h);
    if (layers[l].b) z = ad::add_bias(z, *layers[l].b, m);
    h = ad::activate(z, act, layout);
  }
  ad::Var u = ad::matmul(layers[last].w, h);
  if (layers[last].b) u = ad::add_bias(u, *layers[last].b, m);

  NetDerivs out;
  out.value = ad::slice_cols(u, 0, m);
  out.first.resize(static_cast<std::size_t>(in_dim));
  out.second.resize(static_cast<std::size_t>(in_dim));
  for (const auto& ax : layout.axes) {
    out.first[static_cast<std::size_t>(ax.dim)] = ad::slice_cols(u, ax.first_block * m, m);
    if (ax.second_block >= 0) out.second[static_cast<std::size_t>(ax.dim)] = ad::slice_cols(u, ax.second_block * m, m);
  }
  return out;
}

InputDerivs eval_with_input_derivs(ad::Tape& tape, const std::vector<LayerVars>& layers, const Eigen::VectorXd& x,
                                   int dim, Activation act) {
  Eigen::MatrixXd pt = x;
  const auto d = forward_with_derivs(tape, layers, pt, {{dim, 2}}, act);
  return {d.value, d.d1(dim), d.d2(dim)};
}

}  // namespace lfr::nets
