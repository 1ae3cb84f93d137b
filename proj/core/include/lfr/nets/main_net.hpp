#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "lfr/autodiff/dual.hpp"
#include "lfr/autodiff/tape.hpp"
#include "lfr/nets/activation.hpp"

namespace lfr::nets {

/// Shape of one main-network layer. The flattened length N counts the
/// weights row-major followed by the bias.
struct LayerShape {
  Eigen::Index out = 0;
  Eigen::Index in = 0;
  bool bias = true;

  Eigen::Index n_weights() const { return out * in + (bias ? out : 0); }
  bool operator==(const LayerShape&) const = default;
};

/// Fully connected main network: in_dim -> width (x hidden_layers) -> out_dim.
/// hidden_layers = H gives H + 1 weight layers; the last one has no bias and
/// no activation.
struct MainNetArch {
  int in_dim = 1;
  int width = 64;
  int hidden_layers = 4;
  int out_dim = 1;

  std::vector<LayerShape> layers() const;
  Eigen::Index total_weights() const;
  void validate() const;
  bool operator==(const MainNetArch&) const = default;
};

struct LayerWeights {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;  ///< empty on the final layer

  bool has_bias() const { return b.size() > 0; }
  LayerShape shape() const { return {w.rows(), w.cols(), has_bias()}; }
  Eigen::VectorXd flatten() const;
  static LayerWeights unflatten(const LayerShape& shape, const Eigen::VectorXd& flat);
};

struct MainNetWeights {
  std::vector<LayerWeights> layers;

  /// Throws ShapeError when consecutive layers disagree, L < 2, the final
  /// layer carries a bias, or any entry is non-finite.
  void validate() const;
  Eigen::Index input_dim() const { return layers.front().w.cols(); }
  Eigen::Index output_dim() const { return layers.back().w.rows(); }
  std::vector<LayerShape> shapes() const;

  static MainNetWeights zeros(const MainNetArch& arch);
};

/// u = W_L gamma_{L-1}, gamma_l = act(W_l gamma_{l-1} + b_l), gamma_0 = x.
Eigen::VectorXd main_net_forward(const Eigen::VectorXd& x, const MainNetWeights& weights, Activation act);

/// Column-batched forward: points are the columns of `x`.
Eigen::MatrixXd main_net_forward_batch(const Eigen::MatrixXd& x, const MainNetWeights& weights, Activation act);

/// Untaped forward-mode pass for the first output along input axis `dim`.
ad::DualValue main_net_dual(const Eigen::VectorXd& x, const MainNetWeights& weights, Activation act, int dim);

// -- taped evaluation ----------------------------------------------------------

struct LayerVars {
  ad::Var w;
  std::optional<ad::Var> b;
};

/// Places weights on the tape, as trainable leaves or as constants.
std::vector<LayerVars> weights_on_tape(ad::Tape& tape, const MainNetWeights& weights, bool trainable);

/// Main-network output and its input derivatives over a batch of points, all
/// as nodes of the tape. Entry d of `first`/`second` holds du/dx_d and
/// d^2u/dx_d^2 (1 x M rows) when that axis was requested, else an invalid Var.
struct NetDerivs {
  ad::Var value;
  std::vector<ad::Var> first;
  std::vector<ad::Var> second;

  const ad::Var& d1(int dim) const;
  const ad::Var& d2(int dim) const;
};

/// `axes` lists (input dim, derivative order <= 2) pairs. Derivatives are
/// carried forward as tangent blocks through one packed matrix per layer.
NetDerivs forward_with_derivs(ad::Tape& tape, const std::vector<LayerVars>& layers, const Eigen::MatrixXd& x,
                              const std::vector<std::pair<int, int>>& axes, Activation act);

struct InputDerivs {
  ad::Var u;
  ad::Var du;
  ad::Var d2u;
};

/// (u, du/dx_dim, d^2u/dx_dim^2) at one point; the results stay on the tape
/// so a later backward() sees through them to the weights.
InputDerivs eval_with_input_derivs(ad::Tape& tape, const std::vector<LayerVars>& layers, const Eigen::VectorXd& x,
                                   int dim, Activation act);

}  // namespace lfr::nets
