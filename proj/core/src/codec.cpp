#include "lfr/hypernet/codec.hpp"

#include <cmath>
#include <string>

#include "lfr/errors.hpp"
#include "lfr/spectral/fft.hpp"

namespace lfr::hyper {

using spectral::Complex;

void WeightSpectrum::validate() const {
  if (re.size() != im.size()) throw ShapeError("spectrum re/im length mismatch");
  if (p() < 1 || p() > n_weights) {
    throw ShapeError("spectrum needs 1 <= p <= N (p=" + std::to_string(p()) +
                     ", N=" + std::to_string(n_weights) + ")");
  }
}

Eigen::VectorXd spectrum_to_weights(const WeightSpectrum& spec) {
  spec.validate();
  const std::size_t n = spec.n_weights;
  std::vector<Complex> buf(n, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < spec.p(); ++k) buf[k] = {spec.re[k], spec.im[k]};
  spectral::plan_for(n).inverse(buf);
  Eigen::VectorXd w(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = buf[i].real() * inv_n;
  return w;
}

WeightSpectrum weights_to_spectrum(const Eigen::VectorXd& w, std::size_t p) {
  const auto n = static_cast<std::size_t>(w.size());
  if (p < 1 || p > n) throw ShapeError("weights_to_spectrum needs 1 <= p <= N");
  const auto full = spectral::dft_real({w.data(), n});
  WeightSpectrum s;
  s.n_weights = n;
  s.re.resize(p);
  s.im.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    s.re[k] = full[k].real();
    s.im[k] = full[k].imag();
  }
  return s;
}

std::vector<Complex> reconstruct_hermitian_complex(const WeightSpectrum& spec) {
  spec.validate();
  const std::size_t n = spec.n_weights;
  const std::size_t p = spec.p();
  std::vector<Complex> buf(n, Complex{0.0, 0.0});
  for (std::size_t k = 0; k < p; ++k) buf[k] = {spec.re[k], spec.im[k]};
  for (std::size_t k = 1; k < p; ++k) {
    const std::size_t mirror = n - k;
    if (mirror >= p) buf[mirror] = std::conj(buf[k]);
  }
  spectral::plan_for(n).inverse(buf);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& z : buf) z *= inv_n;
  return buf;
}

Eigen::VectorXd reconstruct_hermitian(const WeightSpectrum& spec) {
  const auto c = reconstruct_hermitian_complex(spec);
  Eigen::VectorXd w(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) w[static_cast<Eigen::Index>(i)] = c[i].real();
  return w;
}

double codec_roundtrip_error(const Eigen::VectorXd& w, std::size_t p) {
  return (w - reconstruct_hermitian(weights_to_spectrum(w, p))).norm();
}

std::vector<double> truncation_error_profile(const Eigen::VectorXd& w) {
  const auto n = static_cast<std::size_t>(w.size());
  if (n == 0) return {};
  const auto full = spectral::dft_real({w.data(), n});
  // Keeping p coefficients (plus mirrors) leaves bins [p, N-p] in the tail.
  // Accumulate from the empty tail downwards so small energies are summed
  // first and no total - retained cancellation occurs.
  std::vector<double> energy(n);
  for (std::size_t k = 0; k < n; ++k) energy[k] = std::norm(full[k]) / static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  double tail = 0.0;
  for (std::size_t p = n; p >= 1; --p) {
    if (p <= n - p) tail += energy[p];
    if (p < n - p) tail += energy[n - p];
    out[p - 1] = std::sqrt(tail);
  }
  return out;
}

}  // namespace lfr::hyper
