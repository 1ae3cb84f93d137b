#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "lfr/errors.hpp"
#include "lfr/physics/pde.hpp"

using namespace lfr;
using physics::Benchmark;

namespace {

constexpr double kPi = std::numbers::pi;

ad::Var row(ad::Tape& t, const Eigen::RowVectorXd& r) { return t.constant(Eigen::MatrixXd(r)); }

// NetDerivs built from closed-form fields instead of a network.
nets::NetDerivs manufactured(ad::Tape& t, const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& sx,
                             const Eigen::RowVectorXd& st, const Eigen::RowVectorXd& sxx) {
  nets::NetDerivs d;
  d.value = row(t, s);
  d.first = {row(t, sx), row(t, st)};
  d.second = {row(t, sxx), ad::Var()};
  return d;
}

Eigen::RowVectorXd grid_row(int n) { return Eigen::RowVectorXd::LinSpaced(n, 0.05, 0.95); }

physics::ParameterSample sample(int m, bool periodic, std::mt19937_64& rng) {
  return {test::randn(m, rng), physics::SensorGrid::uniform(m, periodic)};
}

}  // namespace

TEST(Physics, BenchmarkNames) {
  for (int id = 0; id < 4; ++id) {
    const auto b = physics::benchmark_from_id(id);
    EXPECT_EQ(physics::parse_benchmark(physics::benchmark_name(b)), b);
  }
  EXPECT_THROW(physics::parse_benchmark("heat"), ConfigError);
  EXPECT_THROW(physics::benchmark_from_id(4), ConfigError);
}

TEST(Physics, SensorGrids) {
  const auto open = physics::SensorGrid::uniform(5, false);
  EXPECT_DOUBLE_EQ(open.x[4], 1.0);
  const auto ring = physics::SensorGrid::uniform(4, true);
  EXPECT_DOUBLE_EQ(ring.x[3], 0.75);
  const Eigen::Vector4d v(1, 2, 3, 5);
  EXPECT_DOUBLE_EQ(ring.interp(v, 0.125), 1.5);
  EXPECT_DOUBLE_EQ(ring.interp(v, 0.875), 3.0);  // halfway from 5 back to 1
  EXPECT_DOUBLE_EQ(ring.interp(v, 1.0), 1.0);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  EXPECT_DOUBLE_EQ(open.interp(w, 0.6), 2.4);
  EXPECT_DOUBLE_EQ(open.interp(w, 1.0), 4.0);
  EXPECT_THROW(open.interp(w, 1.01), DomainError);
  EXPECT_THROW(open.interp(Eigen::VectorXd::Zero(3), 0.5), ShapeError);
}

TEST(Physics, ManufacturedAntiderivative) {
  ad::Tape t;
  const auto x = grid_row(9);
  const Eigen::RowVectorXd s = x.array().square(), sx = 2 * x, zero = Eigen::RowVectorXd::Zero(9);
  const auto r = physics::residual_antiderivative(manufactured(t, s, sx, zero, zero), 2 * x);
  EXPECT_LT(r.value().cwiseAbs().maxCoeff(), 1e-15);
  const auto r2 = physics::residual_antiderivative(manufactured(t, s, sx, zero, zero), zero);
  EXPECT_LT((r2.value() - Eigen::MatrixXd(sx)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(physics::residual_antiderivative(manufactured(t, s, sx, zero, zero), Eigen::RowVectorXd::Zero(3)),
               ShapeError);
}

TEST(Physics, ManufacturedAdvection) {
  ad::Tape t;
  const auto x = grid_row(11);
  const Eigen::RowVectorXd tt = x.reverse();
  const double a = 1.3;
  // s = sin(pi (x - a t)) solves s_t + a s_x = 0
  const Eigen::RowVectorXd arg = kPi * (x - a * tt).array();
  const Eigen::RowVectorXd s = arg.array().sin(), sx = kPi * arg.array().cos();
  const Eigen::RowVectorXd st = -a * sx;
  const auto r = physics::residual_advection(manufactured(t, s, sx, st, Eigen::RowVectorXd::Zero(11)),
                                             Eigen::RowVectorXd::Constant(11, a));
  EXPECT_LT(r.value().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_DOUBLE_EQ(physics::advection_speed(0.5), 1.1);
}

TEST(Physics, ManufacturedBurgers) {
  ad::Tape t;
  const auto x = grid_row(11);
  const Eigen::RowVectorXd tt = x.reverse();
  // s = x / (1 + t): s_t = -x/(1+t)^2 = -s s_x, s_xx = 0
  const Eigen::RowVectorXd den = (1.0 + tt.array());
  const Eigen::RowVectorXd s = x.array() / den.array();
  const Eigen::RowVectorXd sx = 1.0 / den.array();
  const Eigen::RowVectorXd st = -x.array() / den.array().square();
  const auto r = physics::residual_burgers(manufactured(t, s, sx, st, Eigen::RowVectorXd::Zero(11)), 0.01);
  EXPECT_LT(r.value().cwiseAbs().maxCoeff(), 1e-15);

  // constant field with curvature only: residual = -nu s_xx
  const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(11), zero = Eigen::RowVectorXd::Zero(11);
  const auto r2 = physics::residual_burgers(manufactured(t, ones, zero, zero, 3.0 * ones), 0.01);
  EXPECT_LT((r2.value().array() + 0.03).abs().maxCoeff(), 1e-15);
}

TEST(Physics, ManufacturedDiffusion) {
  ad::Tape t;
  const auto x = grid_row(11);
  const Eigen::RowVectorXd tt = x.reverse();
  const double D = 0.01, k = 0.01;
  // s = sin(pi x) e^{-t}
  const Eigen::RowVectorXd e = (-tt.array()).exp();
  const Eigen::RowVectorXd s = (kPi * x.array()).sin() * e.array();
  const Eigen::RowVectorXd sx = kPi * (kPi * x.array()).cos() * e.array();
  const Eigen::RowVectorXd st = -s;
  const Eigen::RowVectorXd sxx = -kPi * kPi * s;
  const Eigen::RowVectorXd u = st.array() - D * sxx.array() - k * s.array().square();
  const auto r = physics::residual_diffusion(manufactured(t, s, sx, st, sxx), u, D, k);
  EXPECT_LT(r.value().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Physics, NetworkResidualsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const auto w = test::random_net({2, 10, 3, 1}, rng);
  const auto act = nets::Activation::Tanh;
  const auto eta = sample(20, false, rng);
  const physics::PdeConstants c;
  Eigen::MatrixXd pts(2, 6);
  pts << 0.1, 0.3, 0.45, 0.6, 0.8, 0.95, 0.2, 0.9, 0.5, 0.05, 0.7, 0.33;

  auto s = [&](double x, double t) { return nets::main_net_forward(Eigen::Vector2d(x, t), w, act)[0]; };
  const double h = 1e-4;
  for (auto kind : {Benchmark::Advection, Benchmark::Burgers, Benchmark::Diffusion}) {
    const physics::PdeProblem prob{kind, c};
    ad::Tape tape;
    const auto d = nets::forward_with_derivs(tape, nets::weights_on_tape(tape, w, false), pts, prob.residual_axes(), act);
    const auto r = physics::residual(prob, d, pts, eta);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      const double x = pts(0, j), tt = pts(1, j);
      const double v = s(x, tt);
      const double sx = (s(x + h, tt) - s(x - h, tt)) / (2 * h);
      const double st = (s(x, tt + h) - s(x, tt - h)) / (2 * h);
      const double sxx = (s(x + h, tt) - 2 * v + s(x - h, tt)) / (h * h);
      const double g = eta.sensors.interp(eta.values, x);
      double ref = 0.0;
      switch (kind) {
        case Benchmark::Advection: ref = st + (1.0 + 0.2 * g) * sx; break;
        case Benchmark::Burgers: ref = st + v * sx - c.nu * sxx; break;
        case Benchmark::Diffusion: ref = st - c.d * sxx - c.k * v * v - g; break;
        default: break;
      }
      EXPECT_NEAR(r.value()(0, j), ref, 1e-6) << physics::benchmark_name(kind) << " " << j;
    }
  }
}

TEST(Physics, CollocationFacets) {
  std::mt19937_64 rng(4);
  const physics::CollocationCounts counts{64, 16, 8};
  for (int id = 0; id < 4; ++id) {
    const physics::PdeProblem prob{physics::benchmark_from_id(id), {}};
    const auto eta = sample(10, prob.periodic(), rng);
    Rng r(9);
    const auto b = physics::sample_collocation(prob, eta, counts, r);
    EXPECT_EQ(b.residual.rows(), prob.in_dim());
    EXPECT_EQ(b.residual.cols(), 64);
    EXPECT_GE(b.residual.minCoeff(), 0.0);
    EXPECT_LE(b.residual.maxCoeff(), 1.0);
    if (prob.kind == Benchmark::Antiderivative) {
      EXPECT_EQ(b.bc, Eigen::MatrixXd::Zero(1, 1));
      EXPECT_EQ(b.ic.cols(), 0);
      continue;
    }
    EXPECT_EQ(b.ic.cols(), 8);
    EXPECT_EQ(b.ic.row(1).cwiseAbs().maxCoeff(), 0.0);
    for (Eigen::Index j = 0; j < b.bc.cols(); ++j) EXPECT_TRUE(b.bc(0, j) == 0.0 || b.bc(0, j) == 1.0);
    Rng again(9);
    EXPECT_EQ(physics::sample_collocation(prob, eta, counts, again).residual, b.residual);
  }
}

TEST(Physics, AdvectionBoundaryOnInflowOnly) {
  const physics::PdeProblem prob{Benchmark::Advection, {}};
  physics::ParameterSample eta{Eigen::VectorXd::Constant(5, -10.0), physics::SensorGrid::uniform(5, false)};
  Rng r(1);
  const auto b = physics::sample_collocation(prob, eta, {16, 8, 8}, r);
  ASSERT_EQ(b.bc.cols(), 8);
  EXPECT_EQ(b.bc.row(0).minCoeff(), 1.0);  // a < 0 everywhere: inflow at x = 1

  eta.values.setZero();
  const auto c = physics::sample_collocation(prob, eta, {16, 8, 8}, r);
  ASSERT_EQ(c.bc.cols(), 8);
  EXPECT_EQ(c.bc.row(0).maxCoeff(), 0.0);
}

TEST(Physics, BoundaryTargetsForZeroNetwork) {
  const auto w = nets::MainNetWeights::zeros({2, 4, 2, 1});
  const auto act = nets::Activation::GELU;
  std::mt19937_64 rng(5);

  {
    const physics::PdeProblem prob{Benchmark::Advection, {}};
    const auto eta = sample(8, false, rng);
    physics::CollocationBatch b;
    b.bc.resize(2, 3);
    b.bc << 0, 0, 0, 0.2, 0.5, 1.0;
    b.ic.resize(2, 2);
    b.ic << 0.25, 0.5, 0, 0;
    ad::Tape t;
    const auto r = physics::bc_ic_terms(t, prob, nets::weights_on_tape(t, w, false), eta, b, act);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.bc->value()(0, j), -std::sin(kPi * b.bc(1, j) / 2), 1e-15);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(r.ic->value()(0, j), -std::sin(kPi * b.ic(0, j)), 1e-15);
  }
  {
    const physics::PdeProblem prob{Benchmark::Burgers, {}};
    const auto eta = sample(8, true, rng);
    physics::CollocationBatch b;
    b.bc.resize(2, 4);
    b.bc << 0, 0, 1, 1, 0.3, 0.7, 0.3, 0.7;
    b.ic.resize(2, 2);
    b.ic << 0.1, 0.9, 0, 0;
    ad::Tape t;
    const auto r = physics::bc_ic_terms(t, prob, nets::weights_on_tape(t, w, false), eta, b, act);
    EXPECT_EQ(r.bc->cols(), 4);  // value and slope rows per t
    EXPECT_EQ(r.bc->value().cwiseAbs().maxCoeff(), 0.0);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(r.ic->value()(0, j), -eta.sensors.interp(eta.values, b.ic(0, j)), 1e-15);

    b.bc(1, 3) = 0.8;
    ad::Tape t2;
    EXPECT_THROW(physics::bc_ic_terms(t2, prob, nets::weights_on_tape(t2, w, false), eta, b, act), DomainError);
  }
  {
    const physics::PdeProblem prob{Benchmark::Diffusion, {}};
    const auto eta = sample(8, false, rng);
    physics::CollocationBatch b;
    b.bc.resize(2, 1);
    b.bc << 0.5, 0.5;
    ad::Tape t;
    EXPECT_THROW(physics::bc_ic_terms(t, prob, nets::weights_on_tape(t, w, false), eta, b, act), DomainError);
    b.bc << 1.0, 0.5;
    b.ic.resize(2, 1);
    b.ic << 0.5, 0.1;
    EXPECT_THROW(physics::bc_ic_terms(t, prob, nets::weights_on_tape(t, w, false), eta, b, act), DomainError);
  }
}

TEST(Physics, PeriodicSlopeMismatch) {
  // s = x: values differ by 1 across the period, slopes agree
  nets::MainNetWeights w;
  w.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
  Eigen::MatrixXd last(1, 2);
  last << 1.0, 0.0;
  w.layers.push_back({last, Eigen::VectorXd()});
  const auto act = nets::Activation::Sine;
  std::mt19937_64 rng(6);
  const physics::PdeProblem prob{Benchmark::Burgers, {}};
  const auto eta = sample(8, true, rng);
  physics::CollocationBatch b;
  b.bc.resize(2, 2);
  b.bc << 0, 1, 0.4, 0.4;
  b.ic.resize(2, 0);
  ad::Tape t;
  const auto r = physics::bc_ic_terms(t, prob, nets::weights_on_tape(t, w, false), eta, b, act);
  EXPECT_NEAR(r.bc->value()(0, 0), std::sin(0.0) - std::sin(1.0), 1e-15);
  EXPECT_NEAR(r.bc->value()(0, 1), std::cos(0.0) - std::cos(1.0), 1e-15);
}

TEST(Physics, AssembleLoss) {
  Eigen::VectorXd res(2), bc(1), none;
  res << 1, 2;
  bc << 2;
  const auto t = physics::assemble_loss(res, bc, none, 0.5, 3.0);
  EXPECT_DOUBLE_EQ(t.residual, 2.5);
  EXPECT_DOUBLE_EQ(t.bc, 2.0);
  EXPECT_DOUBLE_EQ(t.ic, 0.0);
  EXPECT_DOUBLE_EQ(t.total, 4.5);
  EXPECT_THROW(physics::assemble_loss(res, bc, none, -1.0, 1.0), ConfigError);

  ad::Tape tape;
  const auto tl = physics::assemble_loss(tape.constant(Eigen::MatrixXd(res.transpose())),
                                         tape.constant(Eigen::MatrixXd(bc.transpose())), std::nullopt, 0.5, 3.0);
  EXPECT_DOUBLE_EQ(tl.total.scalar(), 4.5);
  EXPECT_DOUBLE_EQ(tl.terms.bc, 2.0);
}

TEST(Physics, LossOfZeroNetworkIsSourceEnergy) {
  std::mt19937_64 rng(7);
  const auto eta = sample(16, false, rng);
  const physics::PdeProblem prob{Benchmark::Antiderivative, {}};
  Rng r(2);
  const auto batch = physics::sample_collocation(prob, eta, {200, 1, 1}, r);
  const auto w = nets::MainNetWeights::zeros({1, 4, 2, 1});
  ad::Tape t;
  const auto loss = physics::physics_loss(t, prob, nets::weights_on_tape(t, w, false), eta, batch,
                                          nets::Activation::Tanh);
  double ref = 0.0;
  for (Eigen::Index j = 0; j < batch.residual.cols(); ++j) {
    const double u = eta.sensors.interp(eta.values, batch.residual(0, j));
    ref += u * u;
  }
  ref /= double(batch.residual.cols());
  EXPECT_NEAR(loss.terms.residual, ref, 1e-13);
  EXPECT_EQ(loss.terms.bc, 0.0);
  EXPECT_NEAR(loss.total.scalar(), ref, 1e-13);
}
