#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace lfr::spectral {

using Complex = std::complex<double>;

/// Complex DFT of arbitrary length, backed by Eigen's FFT module. Transforms
/// are unnormalized:
///   forward: X_k = sum_n x_n e^{-2 pi i k n / N}
///   inverse: x_n = sum_k X_k e^{+2 pi i k n / N}
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::size_t size() const { return n_; }
  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread plan cache. A plan keeps scratch space, so it must not be
/// shared between threads.
const FftPlan& plan_for(std::size_t n);

/// Forward DFT of a real sequence (all N coefficients).
std::vector<Complex> dft_real(std::span<const double> x);

}  // namespace lfr::spectral
