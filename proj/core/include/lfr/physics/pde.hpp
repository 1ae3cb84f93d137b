#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lfr/autodiff/tape.hpp"
#include "lfr/nets/main_net.hpp"
#include "lfr/rng.hpp"

namespace lfr::physics {

enum class Benchmark { Antiderivative = 0, Advection = 1, Burgers = 2, Diffusion = 3 };

std::string_view benchmark_name(Benchmark b);
Benchmark parse_benchmark(std::string_view name);
Benchmark benchmark_from_id(int id);

/// Uniform sensor locations on [0, 1]. Non-periodic grids include both ends
/// (x_i = i/(m-1)); periodic grids stop short of 1 (x_i = i/m) and wrap.
struct SensorGrid {
  Eigen::VectorXd x;
  bool periodic = false;

  static SensorGrid uniform(int m, bool periodic);
  int size() const { return static_cast<int>(x.size()); }

  /// Piecewise-linear interpolation of sensor values. Throws DomainError for
  /// points outside the sensor hull.
  double interp(const Eigen::VectorXd& values, double at) const;
  Eigen::RowVectorXd interp(const Eigen::VectorXd& values, const Eigen::RowVectorXd& at) const;
};

/// eta sampled at the sensors.
struct ParameterSample {
  Eigen::VectorXd values;
  SensorGrid sensors;
};

struct PdeConstants {
  double nu = 0.01;  ///< Burgers viscosity
  double d = 0.01;   ///< diffusion coefficient
  double k = 0.01;   ///< reaction coefficient
};

struct PdeProblem {
  Benchmark kind = Benchmark::Antiderivative;
  PdeConstants c;

  /// 1 (x) for the anti-derivative, 2 (x, t) otherwise.
  int in_dim() const { return kind == Benchmark::Antiderivative ? 1 : 2; }
  bool periodic() const { return kind == Benchmark::Burgers; }
  /// Input derivatives needed by the residual, as (dim, order) pairs.
  std::vector<std::pair<int, int>> residual_axes() const;
};

/// Advection speed a(x) = 1 + 0.2 g(x) from the field draw g.
double advection_speed(double g);

// -- residual operators over a batch (rows 1 x M) ------------------------------

/// ds/dx - u
ad::Var residual_antiderivative(const nets::NetDerivs& d, const Eigen::RowVectorXd& u);
/// s_t + a s_x
ad::Var residual_advection(const nets::NetDerivs& d, const Eigen::RowVectorXd& a);
/// s_t + s s_x - nu s_xx
ad::Var residual_burgers(const nets::NetDerivs& d, double nu);
/// s_t - D s_xx - k s^2 - u
ad::Var residual_diffusion(const nets::NetDerivs& d, const Eigen::RowVectorXd& u, double diff, double k);

/// Dispatches to the operator for `problem`, interpolating eta at the points.
ad::Var residual(const PdeProblem& problem, const nets::NetDerivs& d, const Eigen::MatrixXd& pts,
                 const ParameterSample& eta);

// -- collocation ---------------------------------------------------------------

struct CollocationCounts {
  int residual = 1024;
  int bc = 128;
  int ic = 128;
};

/// Points are stored column-wise (row 0 = x, row 1 = t). For Burgers the bc
/// block holds the x = 0 points followed by their x = 1 partners.
struct CollocationBatch {
  Eigen::MatrixXd residual;
  Eigen::MatrixXd bc;
  Eigen::MatrixXd ic;
  double lambda_bc = 1.0;
  double lambda_ic = 1.0;
};

/// Uniform i.i.d. points in the domain and on its facets. Advection puts
/// boundary points only on inflow sides (x = 0 where a(0) > 0, x = 1 where
/// a(1) < 0).
CollocationBatch sample_collocation(const PdeProblem& problem, const ParameterSample& eta,
                                    const CollocationCounts& counts, Rng& rng);

struct BcIcResiduals {
  std::optional<ad::Var> bc;
  std::optional<ad::Var> ic;
};

/// Boundary and initial residual rows. Burgers gives two residuals per t
/// (value match, then slope match). Throws DomainError when a point is not
/// on the facet its block requires.
BcIcResiduals bc_ic_terms(ad::Tape& tape, const PdeProblem& problem, const std::vector<nets::LayerVars>& layers,
                          const ParameterSample& eta, const CollocationBatch& batch, nets::Activation act);

// -- loss ----------------------------------------------------------------------

/// Weighted components; total = residual + bc + ic.
struct LossTerms {
  double total = 0.0;
  double residual = 0.0;
  double bc = 0.0;
  double ic = 0.0;
};

/// (1/M_r) sum r^2 + (lambda_bc/M_bc) sum bc^2 + (lambda_ic/M_ic) sum ic^2.
/// Empty bc or ic lists contribute 0. Negative weights raise ConfigError.
LossTerms assemble_loss(const Eigen::VectorXd& res, const Eigen::VectorXd& bc, const Eigen::VectorXd& ic,
                        double lambda_bc, double lambda_ic);

struct TapedLoss {
  ad::Var total;
  LossTerms terms;
};

TapedLoss assemble_loss(const ad::Var& res, const std::optional<ad::Var>& bc, const std::optional<ad::Var>& ic,
                        double lambda_bc, double lambda_ic);

/// Full physics-informed loss of a main network for one eta.
TapedLoss physics_loss(ad::Tape& tape, const PdeProblem& problem, const std::vector<nets::LayerVars>& layers,
                       const ParameterSample& eta, const CollocationBatch& batch, nets::Activation act);

}  // namespace lfr::physics
