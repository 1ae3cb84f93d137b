#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "lfr/physics/pde.hpp"
#include "lfr/rng.hpp"

namespace lfr::problems {

/// Zero-mean Gaussian random field with the squared-exponential kernel
/// k(x1, x2) = exp(-|x1 - x2|^2 / (2 l^2)). On a periodic grid the distance
/// is the chord length between the points mapped onto a circle of
/// circumference 1, so draws are periodic.
struct GrfSpec {
  double length_scale = 0.2;
  double jitter = 1e-10;      ///< first diagonal regularizer tried
  double max_jitter = 1e-6;   ///< escalation (x10) stops here
};

double grf_kernel(double x1, double x2, double length_scale, bool periodic);

class GrfSampler {
 public:
  /// Factorizes K + jitter I, escalating the jitter x10 until the Cholesky
  /// factorization succeeds. Throws NumericalError past max_jitter.
  GrfSampler(const GrfSpec& spec, const physics::SensorGrid& sensors);

  Eigen::VectorXd sample(Rng& rng) const;
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double jitter_used() const { return jitter_; }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

/// One draw from the field on `sensors` for the given seed.
Eigen::VectorXd grf_sample(const GrfSpec& spec, const physics::SensorGrid& sensors, std::uint64_t seed);

}  // namespace lfr::problems
