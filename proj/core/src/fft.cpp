#include "lfr/spectral/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <map>

#include "lfr/errors.hpp"

namespace lfr::spectral {

struct FftPlan::Impl {
  Eigen::FFT<double> fft;
  std::vector<Complex> scratch;
};

FftPlan::FftPlan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw ShapeError("FFT of length 0");
  impl_->fft.SetFlag(Eigen::FFT<double>::Unscaled);
  impl_->scratch.resize(n);
}

FftPlan::~FftPlan() = default;

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("FFT plan/data length mismatch");
  if (n_ == 1) return;  // kissfft does not factor 1
  impl_->fft.fwd(impl_->scratch.data(), data.data(), static_cast<Eigen::Index>(n_));
  std::copy(impl_->scratch.begin(), impl_->scratch.end(), data.begin());
}

void FftPlan::inverse(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("FFT plan/data length mismatch");
  if (n_ == 1) return;  // kissfft does not factor 1
  impl_->fft.inv(impl_->scratch.data(), data.data(), static_cast<Eigen::Index>(n_));
  std::copy(impl_->scratch.begin(), impl_->scratch.end(), data.begin());
}

const FftPlan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<FftPlan>(n)).first;
  return *it->second;
}

std::vector<Complex> dft_real(std::span<const double> x) {
  std::vector<Complex> out(x.begin(), x.end());
  plan_for(out.size()).forward(out);
  return out;
}

}  // namespace lfr::spectral
