#include "lfr/hypernet/hypernet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "lfr/errors.hpp"
#include "lfr/rng.hpp"

namespace lfr::hyper {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

Eigen::Index mlp_count(int m, const HyperArch& arch, Eigen::Index out) {
  Eigen::Index n = static_cast<Eigen::Index>(m) * arch.width + arch.width;
  n += static_cast<Eigen::Index>(arch.hidden_layers - 1) * (arch.width * arch.width + arch.width);
  n += arch.width * out + out;
  return n;
}

std::vector<Eigen::Index> output_dims(HyperMode mode, const std::vector<nets::LayerShape>& shapes,
                                      const std::vector<std::size_t>& p) {
  std::vector<Eigen::Index> out;
  switch (mode) {
    case HyperMode::FourierReduced:
      for (std::size_t i = 0; i < shapes.size(); ++i) out.push_back(2 * static_cast<Eigen::Index>(p[i]));
      break;
    case HyperMode::FullSpectrum:
      for (const auto& s : shapes) out.push_back(s.n_weights());
      break;
    case HyperMode::SingleHyper: {
      Eigen::Index total = 0;
      for (const auto& s : shapes) total += s.n_weights();
      out.push_back(total);
      break;
    }
  }
  return out;
}

Eigen::VectorXd xavier_layer(Rng& rng, const nets::LayerShape& s) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(s.in + s.out)));
  nets::LayerWeights lw;
  lw.w.resize(s.out, s.in);
  for (Eigen::Index r = 0; r < s.out; ++r) {
    for (Eigen::Index c = 0; c < s.in; ++c) lw.w(r, c) = dist(rng);
  }
  if (s.bias) lw.b = Eigen::VectorXd::Zero(s.out);
  return lw.flatten();
}

// Output bias for a Fourier-reduced layer: the truncated spectrum of a
// Xavier draw, rescaled so the literal reconstruction keeps the draw's RMS.
Eigen::VectorXd spectral_bias(const Eigen::VectorXd& w0, std::size_t p, double gain) {
  const auto spec = weights_to_spectrum(w0, p);
  const double rms0 = w0.norm() / std::sqrt(static_cast<double>(w0.size()));
  const double rms_rec = spectrum_to_weights(spec).norm() / std::sqrt(static_cast<double>(w0.size()));
  const double scale = rms_rec > 0.0 ? rms0 / rms_rec : 1.0;
  const auto ip = static_cast<Eigen::Index>(p);
  Eigen::VectorXd bias(2 * ip);
  bias.head(ip) = spec.re * (scale / gain);
  bias.tail(ip) = spec.im * (scale / gain);
  return bias;
}

}  // namespace

std::string_view mode_name(HyperMode m) {
  switch (m) {
    case HyperMode::FourierReduced: return "fourier_reduced";
    case HyperMode::FullSpectrum: return "full_spectrum";
    case HyperMode::SingleHyper: return "single_hyper";
  }
  return "?";
}

HyperMode parse_mode(std::string_view name) {
  const auto s = lower(name);
  if (s == "fourier_reduced" || s == "lfr") return HyperMode::FourierReduced;
  if (s == "full_spectrum") return HyperMode::FullSpectrum;
  if (s == "single_hyper") return HyperMode::SingleHyper;
  throw ConfigError("unknown hypernetwork mode '" + std::string(name) + "'");
}

std::string_view gain_name(CoefficientGain g) {
  return g == CoefficientGain::Literal ? "literal" : "orthonormal";
}

CoefficientGain parse_gain(std::string_view name) {
  const auto s = lower(name);
  if (s == "literal") return CoefficientGain::Literal;
  if (s == "orthonormal") return CoefficientGain::Orthonormal;
  throw ConfigError("unknown coefficient gain '" + std::string(name) + "'");
}

double gain_factor(CoefficientGain g, Eigen::Index n) {
  return g == CoefficientGain::Literal ? 1.0 : std::sqrt(static_cast<double>(n));
}

std::vector<std::size_t> SpectralCodecConfig::per_layer(const std::vector<nets::LayerShape>& shapes) const {
  std::vector<std::size_t> p(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    p[i] = i == 0 ? p_input : (i + 1 == shapes.size() ? p_output : p_hidden);
    const auto n = static_cast<std::size_t>(shapes[i].n_weights());
    if (p[i] < 1 || p[i] > n) {
      throw ConfigError("truncation p=" + std::to_string(p[i]) + " for layer " + std::to_string(i) +
                        " must lie in [1, " + std::to_string(n) + "]");
    }
  }
  return p;
}

Eigen::Index Mlp::param_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, nets::Activation act) const {
  if (w.empty() || x.size() != w.front().cols()) throw ShapeError("hypernetwork input has wrong length");
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    Eigen::VectorXd z = w[l] * h + b[l];
    if (l + 1 < w.size()) {
      h = z.unaryExpr([act](double v) { return nets::activation_apply(act, v); });
    } else {
      h = std::move(z);
    }
  }
  return h;
}

HyperNetParams HyperNetParams::init(HyperMode mode, const nets::MainNetArch& main, const SpectralCodecConfig& codec,
                                    const HyperArch& arch, int m, std::uint64_t seed) {
  if (m < 1) throw ConfigError("hypernetwork input size m must be >= 1");
  if (arch.width < 1 || arch.hidden_layers < 1) throw ConfigError("hypernetwork needs width, hidden_layers >= 1");
  if (!(arch.init_std > 0.0)) throw ConfigError("init_std must be > 0");
  HyperNetParams hp;
  hp.mode = mode;
  hp.main = main;
  hp.codec = codec;
  hp.arch = arch;
  hp.m = m;
  const auto shapes = main.layers();
  const auto p = codec.per_layer(shapes);
  const auto outs = output_dims(mode, shapes, p);
  const SeedSplitter split(seed);

  for (std::size_t i = 0; i < outs.size(); ++i) {
    Rng rng = split.stream("init", i);
    Mlp net;
    Eigen::Index in = m;
    for (int l = 0; l <= arch.hidden_layers; ++l) {
      const Eigen::Index out = l == arch.hidden_layers ? outs[i] : arch.width;
      Eigen::MatrixXd w(out, in);
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) w(r, c) = truncated_normal(rng, arch.init_std);
      }
      net.w.push_back(std::move(w));
      net.b.push_back(Eigen::VectorXd::Zero(out));
      in = out;
    }

    Rng draw = split.stream("init.xavier", i);
    if (mode == HyperMode::SingleHyper) {
      Eigen::VectorXd bias(outs[i]);
      Eigen::Index off = 0;
      for (const auto& s : shapes) {
        bias.segment(off, s.n_weights()) = xavier_layer(draw, s);
        off += s.n_weights();
      }
      net.b.back() = bias;
    } else if (mode == HyperMode::FullSpectrum) {
      net.b.back() = xavier_layer(draw, shapes[i]);
    } else {
      const Eigen::VectorXd w0 = xavier_layer(draw, shapes[i]);
      net.b.back() = spectral_bias(w0, p[i], gain_factor(arch.gain, shapes[i].n_weights()));
    }
    hp.nets.push_back(std::move(net));
  }
  return hp;
}

Eigen::Index HyperNetParams::count() const {
  Eigen::Index n = 0;
  for (const auto& net : nets) n += net.param_count();
  return n;
}

Eigen::VectorXd HyperNetParams::flatten() const {
  Eigen::VectorXd flat(count());
  Eigen::Index k = 0;
  for (const auto& net : nets) {
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      for (Eigen::Index r = 0; r < net.w[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < net.w[l].cols(); ++c) flat[k++] = net.w[l](r, c);
      }
      flat.segment(k, net.b[l].size()) = net.b[l];
      k += net.b[l].size();
    }
  }
  return flat;
}

void HyperNetParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != count()) throw ShapeError("parameter vector has wrong length");
  Eigen::Index k = 0;
  for (auto& net : nets) {
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      for (Eigen::Index r = 0; r < net.w[l].rows(); ++r) {
        for (Eigen::Index c = 0; c < net.w[l].cols(); ++c) net.w[l](r, c) = flat[k++];
      }
      net.b[l] = flat.segment(k, net.b[l].size());
      k += net.b[l].size();
    }
  }
}

Eigen::Index HyperNetParams::output_dim(std::size_t i) const { return nets.at(i).w.back().rows(); }

void HyperNetParams::validate() const {
  const auto shapes = main.layers();
  const auto outs = output_dims(mode, shapes, codec.per_layer(shapes));
  if (nets.size() != outs.size()) throw ShapeError("wrong number of hypernetworks for the mode");
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const auto& net = nets[i];
    if (net.w.size() != static_cast<std::size_t>(arch.hidden_layers + 1) || net.b.size() != net.w.size()) {
      throw ShapeError("hypernetwork " + std::to_string(i) + " has the wrong depth");
    }
    if (net.w.front().cols() != m) throw ShapeError("hypernetwork input size differs from m");
    if (net.w.back().rows() != outs[i]) {
      throw ShapeError("hypernetwork " + std::to_string(i) + " outputs " + std::to_string(net.w.back().rows()) +
                       " values, expected " + std::to_string(outs[i]));
    }
  }
}

WeightSpectrum hyper_forward(const Eigen::VectorXd& eta, const HyperNetParams& params, std::size_t layer) {
  if (params.mode != HyperMode::FourierReduced) throw ConfigError("hyper_forward needs fourier_reduced mode");
  if (eta.size() != params.m) {
    throw ShapeError("eta has " + std::to_string(eta.size()) + " values, hypernetwork expects " +
                     std::to_string(params.m));
  }
  const auto shapes = params.main.layers();
  const Eigen::VectorXd out = params.nets.at(layer).forward(eta, params.arch.act);
  const Eigen::Index p = out.size() / 2;
  const double g = gain_factor(params.arch.gain, shapes[layer].n_weights());
  WeightSpectrum s;
  s.n_weights = static_cast<std::size_t>(shapes[layer].n_weights());
  s.re = g * out.head(p);
  s.im = g * out.tail(p);
  return s;
}

Eigen::VectorXd HyperVars::gradient(const ad::Tape& tape) const {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t l = 0; l < w[i].size(); ++l) total += w[i][l].value().size() + b[i][l].value().size();
  }
  Eigen::VectorXd g(total);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t l = 0; l < w[i].size(); ++l) {
      const ad::Matrix gw = tape.grad(w[i][l]);
      for (Eigen::Index r = 0; r < gw.rows(); ++r) {
        for (Eigen::Index c = 0; c < gw.cols(); ++c) g[k++] = gw(r, c);
      }
      const ad::Matrix gb = tape.grad(b[i][l]);
      g.segment(k, gb.size()) = gb.col(0);
      k += gb.size();
    }
  }
  return g;
}

HyperVars params_on_tape(ad::Tape& tape, const HyperNetParams& params, bool trainable) {
  HyperVars v;
  for (const auto& net : params.nets) {
    std::vector<ad::Var> ws;
    std::vector<ad::Var> bs;
    for (std::size_t l = 0; l < net.w.size(); ++l) {
      ws.push_back(trainable ? tape.variable(net.w[l]) : tape.constant(net.w[l]));
      bs.push_back(trainable ? tape.variable(net.b[l]) : tape.constant(net.b[l]));
    }
    v.w.push_back(std::move(ws));
    v.b.push_back(std::move(bs));
  }
  return v;
}

std::vector<nets::LayerVars> generate_weights(ad::Tape& tape, const HyperNetParams& params, const HyperVars& vars,
                                              const Eigen::VectorXd& eta) {
  if (eta.size() != params.m) {
    throw ShapeError("eta has " + std::to_string(eta.size()) + " values, hypernetwork expects " +
                     std::to_string(params.m));
  }
  const auto shapes = params.main.layers();
  const ad::TangentLayout plain(1, {});
  const ad::Var x = tape.constant(eta);

  auto run = [&](std::size_t i) {
    ad::Var h = x;
    const std::size_t depth = vars.w[i].size();
    for (std::size_t l = 0; l < depth; ++l) {
      h = ad::add_bias(ad::matmul(vars.w[i][l], h), vars.b[i][l], 1);
      if (l + 1 < depth) h = ad::activate(h, params.arch.act, plain);
    }
    return h;
  };

  auto to_layer = [&](const ad::Var& flat, Eigen::Index offset, const nets::LayerShape& s) {
    nets::LayerVars lv;
    lv.w = ad::segment(flat, offset, s.out, s.in);
    if (s.bias) lv.b = ad::segment(flat, offset + s.out * s.in, s.out, 1);
    return lv;
  };

  std::vector<nets::LayerVars> layers;
  switch (params.mode) {
    case HyperMode::FourierReduced: {
      const auto p = params.codec.per_layer(shapes);
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        const ad::Var out = run(i);
        const auto ip = static_cast<Eigen::Index>(p[i]);
        const ad::Var re = ad::segment(out, 0, ip, 1);
        const ad::Var im = ad::segment(out, ip, ip, 1);
        const Eigen::Index n = shapes[i].n_weights();
        const ad::Var w = ad::inverse_spectrum(re, im, n, gain_factor(params.arch.gain, n));
        layers.push_back(to_layer(w, 0, shapes[i]));
      }
      break;
    }
    case HyperMode::FullSpectrum:
      for (std::size_t i = 0; i < shapes.size(); ++i) layers.push_back(to_layer(run(i), 0, shapes[i]));
      break;
    case HyperMode::SingleHyper: {
      const ad::Var out = run(0);
      Eigen::Index off = 0;
      for (const auto& s : shapes) {
        layers.push_back(to_layer(out, off, s));
        off += s.n_weights();
      }
      break;
    }
  }
  return layers;
}

nets::MainNetWeights reconstruct_weights(const HyperNetParams& params, const Eigen::VectorXd& eta) {
  ad::Tape tape;
  const auto vars = params_on_tape(tape, params, false);
  const auto layers = generate_weights(tape, params, vars, eta);
  nets::MainNetWeights mw;
  for (const auto& lv : layers) {
    nets::LayerWeights lw;
    lw.w = lv.w.value();
    if (lv.b) lw.b = lv.b->value().col(0);
    mw.layers.push_back(std::move(lw));
  }
  return mw;
}

ParamCount parameter_count(const nets::MainNetArch& main, const SpectralCodecConfig& codec, const HyperArch& arch,
                           int m, HyperMode mode) {
  const auto shapes = main.layers();
  const auto p = codec.per_layer(shapes);
  ParamCount pc;
  for (const auto& s : shapes) pc.main_weights += s.n_weights();
  for (auto o : output_dims(mode, shapes, p)) pc.hyper_params += mlp_count(m, arch, o);
  for (auto o : output_dims(HyperMode::FullSpectrum, shapes, p)) pc.full_spectrum_params += mlp_count(m, arch, o);
  pc.single_hyper_params = mlp_count(m, arch, pc.main_weights);
  for (const auto& s : shapes) pc.complex_full_params += mlp_count(m, arch, 2 * s.n_weights());
  pc.ratio = static_cast<double>(pc.hyper_params) / static_cast<double>(pc.full_spectrum_params);
  return pc;
}

}  // namespace lfr::hyper
