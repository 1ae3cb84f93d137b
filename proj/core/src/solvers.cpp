#include "lfr/problems/solvers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "lfr/errors.hpp"
#include "lfr/spectral/fft.hpp"

namespace lfr::problems {

namespace {

constexpr double kPi = std::numbers::pi;

void check_lattice(const Eigen::VectorXd& v, const char* what) {
  if (v.size() < 1) throw ConfigError(std::string(what) + " lattice is empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw DomainError(std::string(what) + " lattice leaves [0,1]");
    if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(std::string(what) + " lattice must be increasing");
  }
}

// Dormand-Prince 5(4) for ds/dx = f(x) between consecutive break points.
struct DormandPrince {
  const std::function<double(double)>& f;
  const Rk45Options& opt;
  long steps = 0;
  long rejected = 0;
  double h = 1e-3;

  double advance(double x0, double x1, double s) {
    // Dormand-Prince tableau; the right-hand side does not depend on s, so
    // only the stage abscissae and the weights enter.
    static constexpr double c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                            e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    double x = x0;
    while (x < x1) {
      if (steps + rejected > opt.max_steps) throw NumericalError("RK45: step budget exhausted");
      bool last = false;
      double step = h;
      if (x + step >= x1) {
        step = x1 - x;
        last = true;
      }
      const double k1 = f(x);
      const double k3 = f(x + c3 * step);
      const double k4 = f(x + c4 * step);
      const double k5 = f(x + c5 * step);
      const double k6 = f(x + step);
      const double s_new = s + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = k6;
      const double err_abs = std::abs(step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
      const double scale = opt.atol + opt.rtol * std::max(std::abs(s), std::abs(s_new));
      const double err = err_abs / scale;
      if (!std::isfinite(s_new) || !std::isfinite(err)) throw NumericalError("RK45: non-finite state");
      if (err <= 1.0) {
        ++steps;
        x = last ? x1 : x + step;
        s = s_new;
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        if (!last) h = step * std::clamp(grow, 0.2, 5.0);
      } else {
        ++rejected;
        h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (h < opt.h_min) {
          std::ostringstream os;
          os << "RK45: step size underflow at x=" << x;
          throw NumericalError(os.str());
        }
      }
    }
    return s;
  }
};

ReferenceSolution antiderivative_impl(const std::function<double(double)>& u, const Eigen::VectorXd& x_out,
                                      const std::vector<double>& extra_breaks, const Rk45Options& opt) {
  check_lattice(x_out, "x");
  std::vector<double> breaks(x_out.data(), x_out.data() + x_out.size());
  breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
  breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  DormandPrince dp{u, opt};
  ReferenceSolution r;
  r.x = x_out;
  r.values.resize(1, x_out.size());
  r.scheme = "rk45-dormand-prince";
  double s = 0.0;
  double x = 0.0;
  Eigen::Index next = 0;
  for (double b : breaks) {
    if (b > x) {
      s = dp.advance(x, b, s);
      x = b;
    }
    while (next < x_out.size() && x_out[next] == x) r.values(0, next++) = s;
  }
  r.steps = dp.steps;
  r.rejected = dp.rejected;
  return r;
}

double bilinear(const Eigen::MatrixXd& field, double h, double dt, double x, double t) {
  const Eigen::Index nt = field.rows();
  const Eigen::Index nx = field.cols();
  const double fx = x / h;
  const double ft = t / dt;
  const Eigen::Index i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(fx)), 0, nx - 2);
  const Eigen::Index j = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(ft)), 0, nt - 2);
  const double ax = fx - static_cast<double>(i);
  const double at = ft - static_cast<double>(j);
  const double lo = field(j, i) + ax * (field(j, i + 1) - field(j, i));
  const double hi = field(j + 1, i) + ax * (field(j + 1, i + 1) - field(j + 1, i));
  return lo + at * (hi - lo);
}

}  // namespace

Eigen::VectorXd lattice(int n) {
  if (n < 2) throw ConfigError("lattice needs at least 2 points");
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = static_cast<double>(i) / (n - 1);
  return v;
}

ReferenceSolution solve_antiderivative_reference(const std::function<double(double)>& u,
                                                 const Eigen::VectorXd& x_out, const Rk45Options& opt) {
  return antiderivative_impl(u, x_out, {}, opt);
}

ReferenceSolution solve_antiderivative_reference(const physics::ParameterSample& u, const Eigen::VectorXd& x_out,
                                                 const Rk45Options& opt) {
  const auto f = [&u](double x) { return u.sensors.interp(u.values, std::clamp(x, 0.0, 1.0)); };
  std::vector<double> breaks(u.sensors.x.data(), u.sensors.x.data() + u.sensors.x.size());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [](double b) { return b < 0.0 || b > 1.0; }),
               breaks.end());
  return antiderivative_impl(f, x_out, breaks, opt);
}

ReferenceSolution solve_advection_reference(const std::function<double(double)>& a, const Eigen::VectorXd& x_out,
                                            const Eigen::VectorXd& t_out, const AdvectionOptions& opt) {
  check_lattice(x_out, "x");
  check_lattice(t_out, "t");
  if (opt.cells < 2 || !(opt.cfl > 0.0 && opt.cfl <= 1.0) || !(opt.t_end > 0.0)) {
    throw ConfigError("invalid advection solver options");
  }
  const int n = opt.cells;
  const double h = 1.0 / n;
  Eigen::VectorXd speed(n + 1);
  for (int i = 0; i <= n; ++i) speed[i] = a(i * h);
  const double amax = speed.cwiseAbs().maxCoeff();
  long steps = opt.min_steps;
  if (amax > 0.0) steps = std::max<long>(steps, static_cast<long>(std::ceil(amax * opt.t_end / (opt.cfl * h))));
  const double dt = opt.t_end / static_cast<double>(steps);
  const double lam = dt / h;

  Eigen::MatrixXd field(steps + 1, n + 1);
  for (int i = 0; i <= n; ++i) field(0, i) = std::sin(kPi * i * h);
  for (long s = 0; s < steps; ++s) {
    const double t_next = static_cast<double>(s + 1) * dt;
    const double inflow = std::sin(kPi * t_next / 2.0);
    for (int i = 0; i <= n; ++i) {
      const double ai = speed[i];
      const double cur = field(s, i);
      double next = cur;
      if (ai > 0.0) {
        next = i == 0 ? inflow : cur - lam * ai * (cur - field(s, i - 1));
      } else if (ai < 0.0) {
        next = i == n ? inflow : cur - lam * ai * (field(s, i + 1) - cur);
      }
      field(s + 1, i) = next;
    }
  }

  ReferenceSolution r;
  r.x = x_out;
  r.t = t_out;
  r.values.resize(t_out.size(), x_out.size());
  for (Eigen::Index j = 0; j < t_out.size(); ++j) {
    for (Eigen::Index i = 0; i < x_out.size(); ++i) {
      r.values(j, i) = bilinear(field, h, dt, x_out[i], t_out[j] * opt.t_end);
    }
  }
  r.scheme = "upwind-1";
  r.steps = steps;
  return r;
}

ReferenceSolution solve_advection_reference(const physics::ParameterSample& g, const Eigen::VectorXd& x_out,
                                            const Eigen::VectorXd& t_out, const AdvectionOptions& opt) {
  const auto a = [&g](double x) { return physics::advection_speed(g.sensors.interp(g.values, x)); };
  return solve_advection_reference(a, x_out, t_out, opt);
}

Eigen::VectorXd periodic_resample(const Eigen::VectorXd& values, int n) {
  const auto m = static_cast<std::size_t>(values.size());
  if (m < 1 || n < 1) throw ConfigError("periodic_resample needs nonempty input and output");
  std::vector<spectral::Complex> src(m);
  for (std::size_t i = 0; i < m; ++i) src[i] = {values[static_cast<Eigen::Index>(i)], 0.0};
  spectral::plan_for(m).forward(src);

  if (static_cast<std::size_t>(n) < m) throw ConfigError("periodic_resample only refines the grid");
  const auto un = static_cast<std::size_t>(n);
  std::vector<spectral::Complex> dst(un, {0.0, 0.0});
  dst[0] = src[0];
  for (std::size_t k = 1; 2 * k < m; ++k) {
    dst[k] = src[k];
    dst[un - k] = src[m - k];
  }
  if (m % 2 == 0) {
    // Split the Nyquist bin between +/- m/2 so the result stays real.
    dst[m / 2] += 0.5 * src[m / 2];
    dst[un - m / 2] += 0.5 * src[m / 2];
  }
  spectral::plan_for(un).inverse(dst);
  Eigen::VectorXd out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < un; ++i) out[static_cast<Eigen::Index>(i)] = dst[i].real() * scale;
  return out;
}

ReferenceSolution solve_burgers_reference(const Eigen::VectorXd& u0, const Eigen::VectorXd& x_out,
                                          const Eigen::VectorXd& t_out, const BurgersOptions& opt) {
  check_lattice(x_out, "x");
  check_lattice(t_out, "t");
  const int n = opt.modes;
  if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n))) throw ConfigError("Burgers modes must be a power of two >= 8");
  if (u0.size() != n) throw ShapeError("Burgers initial profile must live on the solver grid");
  if (!u0.allFinite()) throw NumericalError("Burgers initial profile is not finite");
  const auto un = static_cast<std::size_t>(n);
  const auto& plan = spectral::plan_for(un);
  using C = spectral::Complex;

  std::vector<double> wave(un);
  std::vector<double> mask(un);
  const int cutoff = n / 3;
  for (int j = 0; j < n; ++j) {
    const int kk = j <= n / 2 ? j : j - n;
    wave[static_cast<std::size_t>(j)] = j == n / 2 ? 0.0 : 2.0 * kPi * kk;
    mask[static_cast<std::size_t>(j)] = std::abs(kk) <= cutoff && j != n / 2 ? 1.0 : 0.0;
  }

  std::vector<C> uh(un);
  for (std::size_t j = 0; j < un; ++j) uh[j] = {u0[static_cast<Eigen::Index>(j)], 0.0};
  plan.forward(uh);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<C> work(un);
  auto rhs = [&](const std::vector<C>& state, std::vector<C>& out) {
    for (std::size_t j = 0; j < un; ++j) work[j] = state[j] * mask[j];
    plan.inverse(work);
    double peak = 0.0;
    for (auto& z : work) {
      const double v = z.real() * inv_n;
      peak = std::max(peak, std::abs(v));
      z = {0.5 * v * v, 0.0};
    }
    if (!(peak <= opt.blowup)) throw NumericalError("Burgers solution blew up");
    plan.forward(work);
    for (std::size_t j = 0; j < un; ++j) {
      const double kw = wave[j];
      out[j] = C(0.0, -kw) * (work[j] * mask[j]) - opt.nu * kw * kw * state[j];
    }
  };

  const double umax = u0.cwiseAbs().maxCoeff();
  const double kmax = 2.0 * kPi * cutoff;
  double dt_cap = opt.dt_max;
  if (umax > 0.0) dt_cap = std::min(dt_cap, 1.0 / (umax * kmax));
  // RK4 is stable for real negative eigenvalues down to about -2.78.
  const double knyq = kPi * n;
  if (opt.nu > 0.0) dt_cap = std::min(dt_cap, 2.0 / (opt.nu * knyq * knyq));

  auto evaluate = [&](const std::vector<C>& state, Eigen::Index row, Eigen::MatrixXd& values) {
    for (Eigen::Index i = 0; i < x_out.size(); ++i) {
      double acc = state[0].real();
      for (std::size_t j = 1; j < un; ++j) {
        const int kk = j <= un / 2 ? static_cast<int>(j) : static_cast<int>(j) - n;
        const double ph = 2.0 * kPi * kk * x_out[i];
        acc += state[j].real() * std::cos(ph) - state[j].imag() * std::sin(ph);
      }
      values(row, i) = acc * inv_n;
    }
  };

  ReferenceSolution r;
  r.x = x_out;
  r.t = t_out;
  r.values.resize(t_out.size(), x_out.size());
  r.scheme = "pseudo-spectral-rk4";

  std::vector<C> k1(un), k2(un), k3(un), k4(un), tmp(un);
  double t = 0.0;
  for (Eigen::Index row = 0; row < t_out.size(); ++row) {
    const double span = t_out[row] - t;
    if (span > 0.0) {
      const long sub = static_cast<long>(std::ceil(span / dt_cap - 1e-9));
      const double dt = span / static_cast<double>(sub);
      for (long s = 0; s < sub; ++s) {
        rhs(uh, k1);
        for (std::size_t j = 0; j < un; ++j) tmp[j] = uh[j] + 0.5 * dt * k1[j];
        rhs(tmp, k2);
        for (std::size_t j = 0; j < un; ++j) tmp[j] = uh[j] + 0.5 * dt * k2[j];
        rhs(tmp, k3);
        for (std::size_t j = 0; j < un; ++j) tmp[j] = uh[j] + dt * k3[j];
        rhs(tmp, k4);
        for (std::size_t j = 0; j < un; ++j) uh[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        ++r.steps;
      }
      t = t_out[row];
    }
    evaluate(uh, row, r.values);
  }
  if (!r.values.allFinite()) throw NumericalError("Burgers solution is not finite");
  return r;
}

ReferenceSolution solve_burgers_reference(const physics::ParameterSample& u0, const Eigen::VectorXd& x_out,
                                          const Eigen::VectorXd& t_out, const BurgersOptions& opt) {
  if (!u0.sensors.periodic) throw ConfigError("Burgers initial data must be sampled on a periodic grid");
  return solve_burgers_reference(periodic_resample(u0.values, opt.modes), x_out, t_out, opt);
}

ReferenceSolution solve_diffusion_reference(const std::function<double(double)>& u, int nx_out, int nt_out,
                                            const DiffusionOptions& opt) {
  if (nx_out < 2 || nt_out < 2 || opt.refine < 1 || !(opt.t_end > 0.0) || opt.d < 0.0) {
    throw ConfigError("invalid diffusion solver options");
  }
  const int nx = opt.refine * (nx_out - 1) + 1;
  const int sub = opt.steps > 0 ? opt.steps : opt.refine;
  const double h = 1.0 / (nx - 1);
  const double dt = opt.t_end / (static_cast<double>(nt_out - 1) * sub);
  const int inner = nx - 2;

  Eigen::VectorXd src(inner);
  for (int i = 0; i < inner; ++i) src[i] = u((i + 1) * h);

  // Constant tridiagonal (I - r/2 L); factor once (Thomas).
  const double r = opt.d * dt / (h * h);
  const double lo = -0.5 * r;
  const double di = 1.0 + r;
  std::vector<double> cprime(static_cast<std::size_t>(inner));
  std::vector<double> denom(static_cast<std::size_t>(inner));
  for (int i = 0; i < inner; ++i) {
    const double dd = di - (i > 0 ? lo * cprime[static_cast<std::size_t>(i - 1)] : 0.0);
    denom[static_cast<std::size_t>(i)] = dd;
    cprime[static_cast<std::size_t>(i)] = lo / dd;
  }

  Eigen::VectorXd s = Eigen::VectorXd::Zero(inner);
  Eigen::VectorXd f_prev(inner);
  Eigen::VectorXd rhs(inner);
  bool first = true;

  ReferenceSolution out;
  out.x = lattice(nx_out);
  out.t = lattice(nt_out) * opt.t_end;
  out.values = Eigen::MatrixXd::Zero(nt_out, nx_out);
  out.scheme = "crank-nicolson-ab2";

  for (int row = 1; row < nt_out; ++row) {
    for (int step = 0; step < sub; ++step) {
      const Eigen::VectorXd f = (opt.k * s.array().square()).matrix() + src;
      const Eigen::VectorXd fstar = first ? f : Eigen::VectorXd(1.5 * f - 0.5 * f_prev);
      first = false;
      for (int i = 0; i < inner; ++i) {
        const double left = i > 0 ? s[i - 1] : 0.0;
        const double right = i + 1 < inner ? s[i + 1] : 0.0;
        rhs[i] = s[i] + 0.5 * r * (left - 2.0 * s[i] + right) + dt * fstar[i];
      }
      // forward sweep / back substitution
      for (int i = 0; i < inner; ++i) {
        const double prev = i > 0 ? rhs[i - 1] : 0.0;
        rhs[i] = (rhs[i] - lo * prev) / denom[static_cast<std::size_t>(i)];
      }
      for (int i = inner - 2; i >= 0; --i) rhs[i] -= cprime[static_cast<std::size_t>(i)] * rhs[i + 1];
      f_prev = f;
      s = rhs;
      ++out.steps;
      if (!(s.cwiseAbs().maxCoeff() <= opt.blowup)) {
        std::ostringstream os;
        os << "diffusion-reaction solution exceeded " << opt.blowup << " at t=" << out.steps * dt;
        throw NumericalError(os.str());
      }
    }
    for (int i = 1; i + 1 < nx_out; ++i) out.values(row, i) = s[i * opt.refine - 1];
  }
  return out;
}

ReferenceSolution solve_diffusion_reference(const physics::ParameterSample& u, int nx_out, int nt_out,
                                            const DiffusionOptions& opt) {
  const auto f = [&u](double x) { return u.sensors.interp(u.values, x); };
  return solve_diffusion_reference(f, nx_out, nt_out, opt);
}

}  // namespace lfr::problems
