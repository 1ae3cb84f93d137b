#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "lfr/nets/main_net.hpp"

namespace lfr::test {

inline Eigen::VectorXd randn(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Eigen::MatrixXd randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

/// Random weights scaled like a Xavier draw, with small random biases.
inline nets::MainNetWeights random_net(const nets::MainNetArch& arch, std::mt19937_64& rng) {
  nets::MainNetWeights w;
  for (const auto& s : arch.layers()) {
    nets::LayerWeights lw;
    lw.w = randn(s.out, s.in, rng, std::sqrt(2.0 / static_cast<double>(s.in + s.out)));
    if (s.bias) lw.b = randn(s.out, rng, 0.1);
    w.layers.push_back(lw);
  }
  return w;
}

/// O(N^2) transform used as an oracle for every FFT-based routine.
inline std::vector<std::complex<double>> naive_dft(const Eigen::VectorXd& x, int sign = -1) {
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      s += x[static_cast<Eigen::Index>(j)] * std::polar(1.0, ang);
    }
    out[k] = s;
  }
  return out;
}

/// Plain triple-loop MLP used as an independent forward oracle.
inline double mlp_oracle(const Eigen::VectorXd& x, const nets::MainNetWeights& w, double (*act)(double)) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& lw = w.layers[l];
    std::vector<double> z(static_cast<std::size_t>(lw.w.rows()), 0.0);
    for (Eigen::Index r = 0; r < lw.w.rows(); ++r) {
      double s = lw.has_bias() ? lw.b[r] : 0.0;
      for (Eigen::Index c = 0; c < lw.w.cols(); ++c) s += lw.w(r, c) * h[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = l + 1 < w.layers.size() ? act(s) : s;
    }
    h = z;
  }
  return h[0];
}

}  // namespace lfr::test
