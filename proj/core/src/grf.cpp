#include "lfr/problems/grf.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lfr/errors.hpp"

namespace lfr::problems {

double grf_kernel(double x1, double x2, double length_scale, bool periodic) {
  double d = x1 - x2;
  if (periodic) d = std::sin(std::numbers::pi * d) / std::numbers::pi;
  return std::exp(-d * d / (2.0 * length_scale * length_scale));
}

GrfSampler::GrfSampler(const GrfSpec& spec, const physics::SensorGrid& sensors) {
  if (!(spec.length_scale > 0.0)) throw ConfigError("GRF length scale must be > 0");
  if (!(spec.jitter > 0.0) || spec.max_jitter < spec.jitter) throw ConfigError("GRF jitter range is invalid");
  const Eigen::Index m = sensors.x.size();
  cov_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cov_(i, j) = grf_kernel(sensors.x[i], sensors.x[j], spec.length_scale, sensors.periodic);
    }
  }
  for (double jitter = spec.jitter; jitter <= spec.max_jitter * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd k = cov_;
    k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
  }
  std::ostringstream os;
  os << "GRF covariance (l=" << spec.length_scale << ", m=" << m << ") is not positive definite up to jitter "
     << spec.max_jitter;
  throw NumericalError(os.str());
}

Eigen::VectorXd GrfSampler::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(chol_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return chol_.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd grf_sample(const GrfSpec& spec, const physics::SensorGrid& sensors, std::uint64_t seed) {
  Rng rng(seed);
  return GrfSampler(spec, sensors).sample(rng);
}

}  // namespace lfr::problems
