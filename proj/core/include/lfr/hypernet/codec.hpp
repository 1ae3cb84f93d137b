#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace lfr::hyper {

/// First p DFT coefficients of one layer's flattened weights (weights
/// row-major, bias appended). Real and imaginary parts are stored apart,
/// matching how the hypernetworks emit them.
struct WeightSpectrum {
  Eigen::VectorXd re;
  Eigen::VectorXd im;
  std::size_t n_weights = 0;

  std::size_t p() const { return static_cast<std::size_t>(re.size()); }
  void validate() const;
};

/// w_n = Re[(1/N) sum_{k<p} W_k e^{2 pi i k n / N}], the reconstruction used
/// on the hypernetwork path.
Eigen::VectorXd spectrum_to_weights(const WeightSpectrum& spec);

/// W_k = sum_j w_j e^{-2 pi i k j / N}, k < p.
WeightSpectrum weights_to_spectrum(const Eigen::VectorXd& w, std::size_t p);

/// Analysis-path reconstruction: each retained k >= 1 is paired with its
/// conjugate at N-k (DC unpaired), so p = N, and in fact p > N/2, recovers a
/// real vector exactly. Returns the complex result before the Re projection.
std::vector<std::complex<double>> reconstruct_hermitian_complex(const WeightSpectrum& spec);
Eigen::VectorXd reconstruct_hermitian(const WeightSpectrum& spec);

/// ||w - reconstruct_hermitian(truncate(w, p))||_2, computed directly.
double codec_roundtrip_error(const Eigen::VectorXd& w, std::size_t p);

/// Truncation error for every p = 1..N from the Parseval tail energy of one
/// full transform: entry p-1 holds sqrt((1/N) sum_{k not kept} |W_k|^2).
std::vector<double> truncation_error_profile(const Eigen::VectorXd& w);

}  // namespace lfr::hyper
