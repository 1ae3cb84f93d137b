#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "lfr/physics/pde.hpp"

namespace lfr::problems {

/// Reference field on a lattice: values(j, i) is the solution at t_j, x_i.
/// One-dimensional problems have a single row and an empty t.
struct ReferenceSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd t;
  Eigen::MatrixXd values;
  std::string scheme;
  long steps = 0;
  long rejected = 0;
};

/// Evaluation lattice: n points i/(n-1) on [0, 1].
Eigen::VectorXd lattice(int n);

// -- anti-derivative -------------------------------------------------------

struct Rk45Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_min = 1e-14;
  long max_steps = 10'000'000;
};

/// s(0) = 0, ds/dx = u(x), integrated with Dormand-Prince 5(4) and reported
/// at `x_out` (increasing, inside [0, 1]).
ReferenceSolution solve_antiderivative_reference(const std::function<double(double)>& u,
                                                 const Eigen::VectorXd& x_out, const Rk45Options& opt = {});

/// Sampled forcing, interpolated linearly between sensors. Steps are broken
/// at the sensor locations so each piece is smooth.
ReferenceSolution solve_antiderivative_reference(const physics::ParameterSample& u, const Eigen::VectorXd& x_out,
                                                 const Rk45Options& opt = {});

// -- advection -------------------------------------------------------------

struct AdvectionOptions {
  int cells = 512;
  int min_steps = 512;
  double cfl = 0.9;   ///< time steps are refined until max|a| dt / h <= cfl
  double t_end = 1.0;
};

/// s_t + a(x) s_x = 0 on [0, 1]^2, s(x, 0) = sin(pi x), inflow value
/// sin(pi t / 2). First-order upwind; the result is interpolated onto the
/// x_out by t_out lattice.
ReferenceSolution solve_advection_reference(const std::function<double(double)>& a, const Eigen::VectorXd& x_out,
                                            const Eigen::VectorXd& t_out, const AdvectionOptions& opt = {});

ReferenceSolution solve_advection_reference(const physics::ParameterSample& g, const Eigen::VectorXd& x_out,
                                            const Eigen::VectorXd& t_out, const AdvectionOptions& opt = {});

// -- Burgers ---------------------------------------------------------------

struct BurgersOptions {
  int modes = 256;       ///< grid points; must be a power of two
  double nu = 0.01;
  double dt_max = 5e-4;
  double blowup = 1e3;
};

/// Trigonometric interpolation of periodic sensor values onto n grid points.
Eigen::VectorXd periodic_resample(const Eigen::VectorXd& values, int n);

/// Pseudo-spectral Burgers solve with 2/3 dealiasing and classical RK4.
/// `u0` is the initial profile on the solver grid j / modes. Output times
/// are hit exactly; the spatial values come from the Fourier series.
ReferenceSolution solve_burgers_reference(const Eigen::VectorXd& u0, const Eigen::VectorXd& x_out,
                                          const Eigen::VectorXd& t_out, const BurgersOptions& opt = {});

ReferenceSolution solve_burgers_reference(const physics::ParameterSample& u0, const Eigen::VectorXd& x_out,
                                          const Eigen::VectorXd& t_out, const BurgersOptions& opt = {});

// -- diffusion-reaction ----------------------------------------------------

struct DiffusionOptions {
  double d = 0.01;
  double k = 0.01;
  int refine = 4;       ///< internal grid is `refine` times the output lattice
  double t_end = 1.0;
  int steps = 0;        ///< 0: refine x (output intervals)
  double blowup = 1e6;
};

/// s_t = D s_xx + k s^2 + u(x), s = 0 at t = 0 and at x = 0, 1.
/// Crank-Nicolson for diffusion, second-order Adams-Bashforth for the
/// reaction and source terms. x_out and t_out must be uniform lattices
/// starting at 0; t_out is scaled to [0, t_end].
ReferenceSolution solve_diffusion_reference(const std::function<double(double)>& u, int nx_out, int nt_out,
                                            const DiffusionOptions& opt = {});

ReferenceSolution solve_diffusion_reference(const physics::ParameterSample& u, int nx_out, int nt_out,
                                            const DiffusionOptions& opt = {});

}  // namespace lfr::problems
