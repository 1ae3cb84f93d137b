#include "lfr/physics/pde.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "lfr/errors.hpp"

namespace lfr::physics {

namespace {

constexpr double kPi = std::numbers::pi;

ad::Tape& tape_of(const nets::NetDerivs& d) { return *d.value.tape(); }

ad::Var row_constant(ad::Tape& tape, const Eigen::RowVectorXd& row) { return tape.constant(Eigen::MatrixXd(row)); }

void check_row(const nets::NetDerivs& d, const Eigen::RowVectorXd& row, const char* what) {
  if (row.size() != d.value.cols()) {
    std::ostringstream os;
    os << what << " has " << row.size() << " values for " << d.value.cols() << " points";
    throw ShapeError(os.str());
  }
}

void require_on(const Eigen::MatrixXd& pts, int row, double value, const char* facet) {
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    if (pts(row, j) != value) {
      std::ostringstream os;
      os << "point " << j << " is not on the " << facet << " facet";
      throw DomainError(os.str());
    }
  }
}

void require_inside(const Eigen::MatrixXd& pts, const char* what) {
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    for (Eigen::Index r = 0; r < pts.rows(); ++r) {
      if (!(pts(r, j) >= 0.0 && pts(r, j) <= 1.0)) {
        std::ostringstream os;
        os << what << " point " << j << " lies outside [0,1]";
        throw DomainError(os.str());
      }
    }
  }
}

Eigen::RowVectorXd uniform_row(Rng& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::RowVectorXd r(n);
  for (int i = 0; i < n; ++i) r[i] = u(rng);
  return r;
}

}  // namespace

std::string_view benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::Antiderivative: return "antiderivative";
    case Benchmark::Advection: return "advection";
    case Benchmark::Burgers: return "burgers";
    case Benchmark::Diffusion: return "diffusion";
  }
  return "?";
}

Benchmark parse_benchmark(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "antiderivative" || s == "anti-derivative") return Benchmark::Antiderivative;
  if (s == "advection") return Benchmark::Advection;
  if (s == "burgers") return Benchmark::Burgers;
  if (s == "diffusion" || s == "diffusion-reaction") return Benchmark::Diffusion;
  throw ConfigError("unknown benchmark '" + std::string(name) + "'");
}

Benchmark benchmark_from_id(int id) {
  if (id < 0 || id > 3) throw ConfigError("unknown benchmark id " + std::to_string(id));
  return static_cast<Benchmark>(id);
}

SensorGrid SensorGrid::uniform(int m, bool periodic) {
  if (m < 2) throw ConfigError("sensor grid needs m >= 2");
  SensorGrid g;
  g.periodic = periodic;
  g.x.resize(m);
  const double h = periodic ? 1.0 / m : 1.0 / (m - 1);
  for (int i = 0; i < m; ++i) g.x[i] = i * h;
  return g;
}

double SensorGrid::interp(const Eigen::VectorXd& values, double at) const {
  const Eigen::Index m = x.size();
  if (values.size() != m) throw ShapeError("sensor values and grid differ in length");
  if (periodic) {
    if (!(at >= 0.0 && at <= 1.0)) throw DomainError("interpolation point outside [0,1]");
    const double s = at * static_cast<double>(m);
    auto i = static_cast<Eigen::Index>(std::floor(s));
    const double f = s - static_cast<double>(i);
    i = std::min(i, m);
    const Eigen::Index a = i % m;
    const Eigen::Index b = (i + 1) % m;
    return values[a] + f * (values[b] - values[a]);
  }
  if (!(at >= x[0] && at <= x[m - 1])) throw DomainError("interpolation point outside the sensor hull");
  const double h = x[1] - x[0];
  auto i = static_cast<Eigen::Index>(std::floor((at - x[0]) / h));
  i = std::clamp<Eigen::Index>(i, 0, m - 2);
  const double f = (at - x[i]) / h;
  return values[i] + f * (values[i + 1] - values[i]);
}

Eigen::RowVectorXd SensorGrid::interp(const Eigen::VectorXd& values, const Eigen::RowVectorXd& at) const {
  Eigen::RowVectorXd out(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) out[j] = interp(values, at[j]);
  return out;
}

std::vector<std::pair<int, int>> PdeProblem::residual_axes() const {
  switch (kind) {
    case Benchmark::Antiderivative: return {{0, 1}};
    case Benchmark::Advection: return {{0, 1}, {1, 1}};
    case Benchmark::Burgers:
    case Benchmark::Diffusion: return {{0, 2}, {1, 1}};
  }
  return {};
}

double advection_speed(double g) { return 1.0 + 0.2 * g; }

ad::Var residual_antiderivative(const nets::NetDerivs& d, const Eigen::RowVectorXd& u) {
  check_row(d, u, "forcing");
  return d.d1(0) - row_constant(tape_of(d), u);
}

ad::Var residual_advection(const nets::NetDerivs& d, const Eigen::RowVectorXd& a) {
  check_row(d, a, "speed");
  return d.d1(1) + ad::mul(row_constant(tape_of(d), a), d.d1(0));
}

ad::Var residual_burgers(const nets::NetDerivs& d, double nu) {
  return d.d1(1) + ad::mul(d.value, d.d1(0)) - nu * d.d2(0);
}

ad::Var residual_diffusion(const nets::NetDerivs& d, const Eigen::RowVectorXd& u, double diff, double k) {
  check_row(d, u, "source");
  return d.d1(1) - diff * d.d2(0) - k * ad::square(d.value) - row_constant(tape_of(d), u);
}

ad::Var residual(const PdeProblem& problem, const nets::NetDerivs& d, const Eigen::MatrixXd& pts,
                 const ParameterSample& eta) {
  require_inside(pts, "residual");
  switch (problem.kind) {
    case Benchmark::Antiderivative: return residual_antiderivative(d, eta.sensors.interp(eta.values, pts.row(0)));
    case Benchmark::Advection: {
      Eigen::RowVectorXd a = eta.sensors.interp(eta.values, pts.row(0));
      a = a.unaryExpr([](double g) { return advection_speed(g); });
      return residual_advection(d, a);
    }
    case Benchmark::Burgers: return residual_burgers(d, problem.c.nu);
    case Benchmark::Diffusion:
      return residual_diffusion(d, eta.sensors.interp(eta.values, pts.row(0)), problem.c.d, problem.c.k);
  }
  throw std::logic_error("unhandled benchmark");
}

CollocationBatch sample_collocation(const PdeProblem& problem, const ParameterSample& eta,
                                    const CollocationCounts& counts, Rng& rng) {
  if (counts.residual < 1 || counts.bc < 1 || counts.ic < 1) throw ConfigError("collocation counts must be >= 1");
  CollocationBatch b;
  if (problem.kind == Benchmark::Antiderivative) {
    b.residual = uniform_row(rng, counts.residual);
    b.bc = Eigen::MatrixXd::Zero(1, 1);
    b.ic.resize(1, 0);
    return b;
  }
  b.residual.resize(2, counts.residual);
  b.residual.row(0) = uniform_row(rng, counts.residual);
  b.residual.row(1) = uniform_row(rng, counts.residual);

  b.ic.resize(2, counts.ic);
  b.ic.row(0) = uniform_row(rng, counts.ic);
  b.ic.row(1).setZero();

  const Eigen::RowVectorXd t = uniform_row(rng, counts.bc);
  switch (problem.kind) {
    case Benchmark::Advection: {
      const bool left = advection_speed(eta.values[0]) > 0.0;
      const bool right = advection_speed(eta.values[eta.values.size() - 1]) < 0.0;
      const int sides = static_cast<int>(left) + static_cast<int>(right);
      b.bc.resize(2, static_cast<Eigen::Index>(sides) * counts.bc);
      Eigen::Index off = 0;
      if (left) {
        b.bc.block(0, off, 1, counts.bc).setZero();
        b.bc.block(1, off, 1, counts.bc) = t;
        off += counts.bc;
      }
      if (right) {
        b.bc.block(0, off, 1, counts.bc).setOnes();
        b.bc.block(1, off, 1, counts.bc) = t;
      }
      break;
    }
    case Benchmark::Burgers:
    case Benchmark::Diffusion:
      b.bc.resize(2, 2 * counts.bc);
      b.bc.block(0, 0, 1, counts.bc).setZero();
      b.bc.block(0, counts.bc, 1, counts.bc).setOnes();
      b.bc.block(1, 0, 1, counts.bc) = t;
      b.bc.block(1, counts.bc, 1, counts.bc) = t;
      break;
    case Benchmark::Antiderivative: break;
  }
  return b;
}

BcIcResiduals bc_ic_terms(ad::Tape& tape, const PdeProblem& problem, const std::vector<nets::LayerVars>& layers,
                          const ParameterSample& eta, const CollocationBatch& batch, nets::Activation act) {
  BcIcResiduals out;
  const Eigen::Index nbc = batch.bc.cols();
  const Eigen::Index nic = batch.ic.cols();
  if (nbc > 0 && batch.bc.rows() != problem.in_dim()) throw ShapeError("bc points have the wrong dimension");
  if (nic > 0 && batch.ic.rows() != problem.in_dim()) throw ShapeError("ic points have the wrong dimension");

  switch (problem.kind) {
    case Benchmark::Antiderivative: {
      if (nic > 0) throw DomainError("the anti-derivative problem has no initial facet");
      if (nbc > 0) {
        require_on(batch.bc, 0, 0.0, "x = 0");
        out.bc = nets::forward_with_derivs(tape, layers, batch.bc, {}, act).value;
      }
      return out;
    }
    case Benchmark::Advection: {
      if (nbc > 0) {
        require_inside(batch.bc, "bc");
        Eigen::RowVectorXd target(nbc);
        for (Eigen::Index j = 0; j < nbc; ++j) {
          const double x = batch.bc(0, j);
          if (x != 0.0 && x != 1.0) throw DomainError("advection bc point is not on x = 0 or x = 1");
          target[j] = std::sin(kPi * batch.bc(1, j) / 2.0);
        }
        const auto d = nets::forward_with_derivs(tape, layers, batch.bc, {}, act);
        out.bc = d.value - tape.constant(Eigen::MatrixXd(target));
      }
      if (nic > 0) {
        require_on(batch.ic, 1, 0.0, "t = 0");
        require_inside(batch.ic, "ic");
        const Eigen::RowVectorXd target = batch.ic.row(0).unaryExpr([](double x) { return std::sin(kPi * x); });
        const auto d = nets::forward_with_derivs(tape, layers, batch.ic, {}, act);
        out.ic = d.value - tape.constant(Eigen::MatrixXd(target));
      }
      return out;
    }
    case Benchmark::Burgers: {
      if (nbc > 0) {
        if (nbc % 2 != 0) throw DomainError("periodic bc needs paired points");
        const Eigen::Index half = nbc / 2;
        require_on(batch.bc.leftCols(half), 0, 0.0, "x = 0");
        require_on(batch.bc.rightCols(half), 0, 1.0, "x = 1");
        if (batch.bc.row(1).head(half) != batch.bc.row(1).tail(half)) {
          throw DomainError("periodic bc pairs must share t");
        }
        require_inside(batch.bc, "bc");
        const auto d = nets::forward_with_derivs(tape, layers, batch.bc, {{0, 1}}, act);
        const ad::Var dv = ad::slice_cols(d.value, 0, half) - ad::slice_cols(d.value, half, half);
        const ad::Var ds = ad::slice_cols(d.d1(0), 0, half) - ad::slice_cols(d.d1(0), half, half);
        out.bc = ad::concat_cols(dv, ds);
      }
      if (nic > 0) {
        require_on(batch.ic, 1, 0.0, "t = 0");
        require_inside(batch.ic, "ic");
        const auto target = eta.sensors.interp(eta.values, batch.ic.row(0));
        const auto d = nets::forward_with_derivs(tape, layers, batch.ic, {}, act);
        out.ic = d.value - tape.constant(Eigen::MatrixXd(target));
      }
      return out;
    }
    case Benchmark::Diffusion: {
      if (nbc > 0) {
        require_inside(batch.bc, "bc");
        for (Eigen::Index j = 0; j < nbc; ++j) {
          if (batch.bc(0, j) != 0.0 && batch.bc(0, j) != 1.0) {
            throw DomainError("diffusion bc point is not on x = 0 or x = 1");
          }
        }
        out.bc = nets::forward_with_derivs(tape, layers, batch.bc, {}, act).value;
      }
      if (nic > 0) {
        require_on(batch.ic, 1, 0.0, "t = 0");
        require_inside(batch.ic, "ic");
        out.ic = nets::forward_with_derivs(tape, layers, batch.ic, {}, act).value;
      }
      return out;
    }
  }
  return out;
}

LossTerms assemble_loss(const Eigen::VectorXd& res, const Eigen::VectorXd& bc, const Eigen::VectorXd& ic,
                        double lambda_bc, double lambda_ic) {
  if (lambda_bc < 0.0 || lambda_ic < 0.0) throw ConfigError("loss weights must be nonnegative");
  if (res.size() == 0) throw ShapeError("assemble_loss needs at least one residual");
  LossTerms t;
  t.residual = res.squaredNorm() / static_cast<double>(res.size());
  if (bc.size() > 0) t.bc = lambda_bc * bc.squaredNorm() / static_cast<double>(bc.size());
  if (ic.size() > 0) t.ic = lambda_ic * ic.squaredNorm() / static_cast<double>(ic.size());
  t.total = t.residual + t.bc + t.ic;
  return t;
}

TapedLoss assemble_loss(const ad::Var& res, const std::optional<ad::Var>& bc, const std::optional<ad::Var>& ic,
                        double lambda_bc, double lambda_ic) {
  if (lambda_bc < 0.0 || lambda_ic < 0.0) throw ConfigError("loss weights must be nonnegative");
  if (res.value().size() == 0) throw ShapeError("assemble_loss needs at least one residual");
  TapedLoss out;
  out.total = ad::mean(ad::square(res));
  out.terms.residual = out.total.scalar();
  if (bc && bc->value().size() > 0) {
    const ad::Var term = lambda_bc * ad::mean(ad::square(*bc));
    out.terms.bc = term.scalar();
    out.total = out.total + term;
  }
  if (ic && ic->value().size() > 0) {
    const ad::Var term = lambda_ic * ad::mean(ad::square(*ic));
    out.terms.ic = term.scalar();
    out.total = out.total + term;
  }
  out.terms.total = out.total.scalar();
  return out;
}

TapedLoss physics_loss(ad::Tape& tape, const PdeProblem& problem, const std::vector<nets::LayerVars>& layers,
                       const ParameterSample& eta, const CollocationBatch& batch, nets::Activation act) {
  if (batch.residual.rows() != problem.in_dim()) throw ShapeError("residual points have the wrong dimension");
  const auto d = nets::forward_with_derivs(tape, layers, batch.residual, problem.residual_axes(), act);
  const ad::Var r = residual(problem, d, batch.residual, eta);
  const auto bcic = bc_ic_terms(tape, problem, layers, eta, batch, act);
  return assemble_loss(r, bcic.bc, bcic.ic, batch.lambda_bc, batch.lambda_ic);
}

}  // namespace lfr::physics
