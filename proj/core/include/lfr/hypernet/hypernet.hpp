#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

#include "lfr/autodiff/tape.hpp"
#include "lfr/hypernet/codec.hpp"
#include "lfr/nets/main_net.hpp"

namespace lfr::hyper {

enum class HyperMode { FourierReduced, FullSpectrum, SingleHyper };

std::string_view mode_name(HyperMode m);
HyperMode parse_mode(std::string_view name);

/// Scale applied to the raw coefficients before the inverse transform.
/// Literal keeps the plain 1/N reconstruction; Orthonormal multiplies by
/// sqrt(N) so that O(1) hypernetwork outputs give O(1/sqrt(N)) weights.
enum class CoefficientGain { Literal, Orthonormal };

std::string_view gain_name(CoefficientGain g);
CoefficientGain parse_gain(std::string_view name);
double gain_factor(CoefficientGain g, Eigen::Index n);

/// Truncation counts for the input layer, every hidden layer, and the output
/// layer of the main network.
struct SpectralCodecConfig {
  std::size_t p_input = 32;
  std::size_t p_hidden = 2048;
  std::size_t p_output = 16;

  /// p for each main-network layer, checked against the layer sizes.
  std::vector<std::size_t> per_layer(const std::vector<nets::LayerShape>& shapes) const;
  bool operator==(const SpectralCodecConfig&) const = default;
};

/// Shape of each hypernetwork: m -> width (x hidden_layers) -> outputs.
struct HyperArch {
  int width = 64;
  int hidden_layers = 2;
  nets::Activation act = nets::Activation::GELU;
  double init_std = 0.05;
  CoefficientGain gain = CoefficientGain::Orthonormal;

  bool operator==(const HyperArch&) const = default;
};

/// Plain MLP with a bias on every layer and a linear last layer.
struct Mlp {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  Eigen::Index param_count() const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x, nets::Activation act) const;
};

struct HyperNetParams {
  HyperMode mode = HyperMode::FourierReduced;
  nets::MainNetArch main;
  SpectralCodecConfig codec;
  HyperArch arch;
  int m = 100;
  std::vector<Mlp> nets;  ///< one per main layer, or one in SingleHyper mode

  /// Random initialization: truncated normal weights, zero hidden biases. The
  /// output bias is set so that the generated main network starts near a
  /// Xavier-normal draw (see README, "Initialization").
  static HyperNetParams init(HyperMode mode, const nets::MainNetArch& main, const SpectralCodecConfig& codec,
                             const HyperArch& arch, int m, std::uint64_t seed);

  Eigen::Index count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  /// Output width of hypernetwork i.
  Eigen::Index output_dim(std::size_t i) const;
  void validate() const;
};

/// F_i: eta -> truncated spectrum (FourierReduced mode). Outputs [0, p) are
/// the real parts, [p, 2p) the imaginary parts. Coefficients are returned
/// with the gain already applied, so spectrum_to_weights() yields weights.
WeightSpectrum hyper_forward(const Eigen::VectorXd& eta, const HyperNetParams& params, std::size_t layer);

/// Parameters as tape leaves, in flatten() order.
struct HyperVars {
  std::vector<std::vector<ad::Var>> w;
  std::vector<std::vector<ad::Var>> b;

  /// Gradient of the last backward() in flatten() order.
  Eigen::VectorXd gradient(const ad::Tape& tape) const;
};

HyperVars params_on_tape(ad::Tape& tape, const HyperNetParams& params, bool trainable = true);

/// Main-network weights generated from eta, as tape nodes.
std::vector<nets::LayerVars> generate_weights(ad::Tape& tape, const HyperNetParams& params, const HyperVars& vars,
                                              const Eigen::VectorXd& eta);

/// Zero-shot reconstruction: the same computation as generate_weights with
/// the values read back off the tape.
nets::MainNetWeights reconstruct_weights(const HyperNetParams& params, const Eigen::VectorXd& eta);

struct ParamCount {
  Eigen::Index hyper_params = 0;         ///< trainable parameters in the requested mode
  Eigen::Index main_weights = 0;         ///< sum of N_i
  Eigen::Index full_spectrum_params = 0; ///< layered, N_i outputs per layer
  Eigen::Index single_hyper_params = 0;  ///< one network with sum N_i outputs
  Eigen::Index complex_full_params = 0;  ///< layered, 2 N_i outputs (p_i = N_i)
  double ratio = 0.0;                    ///< hyper_params / full_spectrum_params
};

ParamCount parameter_count(const nets::MainNetArch& main, const SpectralCodecConfig& codec, const HyperArch& arch,
                           int m, HyperMode mode);

}  // namespace lfr::hyper
