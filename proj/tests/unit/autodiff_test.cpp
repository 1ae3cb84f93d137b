#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "lfr/autodiff/dual.hpp"
#include "lfr/autodiff/tape.hpp"
#include "lfr/errors.hpp"
#include "lfr/training/train.hpp"

using namespace lfr;
using lfr::ad::Var;

namespace {

const nets::Activation kActs[] = {nets::Activation::GELU, nets::Activation::Tanh, nets::Activation::Sine,
                                  nets::Activation::Sigmoid};

std::vector<nets::LayerVars> layers_from_flat(const Var& p, const std::vector<nets::LayerShape>& shapes) {
  std::vector<nets::LayerVars> out;
  Eigen::Index off = 0;
  for (const auto& s : shapes) {
    nets::LayerVars lv;
    lv.w = ad::segment(p, off, s.out, s.in);
    off += s.out * s.in;
    if (s.bias) {
      lv.b = ad::segment(p, off, s.out, 1);
      off += s.out;
    }
    out.push_back(lv);
  }
  return out;
}

double max_scaled_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Grad, Square) {
  const auto r = ad::grad([](ad::Tape&, const Var& p) { return ad::sum(ad::square(p)); }, Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_DOUBLE_EQ(r.value, 9.0);
  EXPECT_DOUBLE_EQ(r.gradient[0], 6.0);
}

TEST(Grad, SumIsAllOnes) {
  std::mt19937_64 rng(3);
  const Eigen::VectorXd w = test::randn(17, rng);
  const auto r = ad::grad([](ad::Tape&, const Var& p) { return ad::sum(p); }, w);
  EXPECT_NEAR(r.value, w.sum(), 1e-12);
  EXPECT_EQ(r.gradient, Eigen::VectorXd::Ones(17));
}

TEST(Grad, MlpLossMatchesFiniteDifferences) {
  const nets::MainNetArch arch{2, 6, 2, 1};
  const auto shapes = arch.layers();
  for (auto act : kActs) {
    for (int seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(100 + seed);
      const Eigen::VectorXd theta = training::flatten_weights(test::random_net(arch, rng));
      const Eigen::MatrixXd x = test::randn(2, 7, rng);
      auto loss = [&](ad::Tape& tape, const Var& p) {
        const auto d = nets::forward_with_derivs(tape, layers_from_flat(p, shapes), x, {}, act);
        return ad::mean(ad::square(d.value));
      };
      const auto r = ad::grad(loss, theta);
      Eigen::VectorXd fd(theta.size());
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const auto fp = nets::main_net_forward_batch(x, training::unflatten_weights(shapes, tp), act);
        const auto fm = nets::main_net_forward_batch(x, training::unflatten_weights(shapes, tm), act);
        fd[i] = (fp.squaredNorm() - fm.squaredNorm()) / x.cols() / (2 * h);
      }
      EXPECT_LT(max_scaled_diff(r.gradient, fd), 1e-5) << nets::activation_name(act) << " seed " << seed;
    }
  }
}

TEST(Grad, GradientThroughSecondInputDerivative) {
  const nets::MainNetArch arch{2, 5, 2, 1};
  const auto shapes = arch.layers();
  for (auto act : kActs) {
    std::mt19937_64 rng(7);
    const Eigen::VectorXd theta = training::flatten_weights(test::random_net(arch, rng));
    const Eigen::MatrixXd x = test::randn(2, 4, rng);
    auto loss = [&](ad::Tape& tape, const Var& p) {
      const auto d = nets::forward_with_derivs(tape, layers_from_flat(p, shapes), x, {{0, 2}, {1, 1}}, act);
      return ad::sum(ad::mul(d.d2(0), d.d1(1)));
    };
    // oracle: untaped duals, differenced over the weights
    auto direct = [&](const Eigen::VectorXd& t) {
      const auto w = training::unflatten_weights(shapes, t);
      double s = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        s += nets::main_net_dual(x.col(j), w, act, 0).tangent2 * nets::main_net_dual(x.col(j), w, act, 1).tangent1;
      }
      return s;
    };
    const auto r = ad::grad(loss, theta);
    EXPECT_NEAR(r.value, direct(theta), 1e-12);
    Eigen::VectorXd fd(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[i] += 1e-5;
      tm[i] -= 1e-5;
      fd[i] = (direct(tp) - direct(tm)) / 2e-5;
    }
    EXPECT_LT(max_scaled_diff(r.gradient, fd), 1e-5) << nets::activation_name(act);
  }
}

TEST(InputDerivs, TanhUnitAtZero) {
  nets::MainNetWeights w;
  w.layers.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)});
  w.layers.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd()});
  ad::Tape tape;
  const auto d = nets::eval_with_input_derivs(tape, nets::weights_on_tape(tape, w, true), Eigen::VectorXd::Zero(1), 0,
                                              nets::Activation::Tanh);
  EXPECT_EQ(d.u.scalar(), 0.0);
  EXPECT_EQ(d.du.scalar(), 1.0);
  EXPECT_EQ(d.d2u.scalar(), 0.0);
}

TEST(InputDerivs, MatchFiniteDifferences) {
  const nets::MainNetArch arch{2, 8, 3, 1};
  for (auto act : kActs) {
    for (int seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(200 + seed);
      const auto w = test::random_net(arch, rng);
      const Eigen::VectorXd x = test::randn(2, rng, 0.5);
      for (int dim = 0; dim < 2; ++dim) {
        ad::Tape tape;
        const auto d = nets::eval_with_input_derivs(tape, nets::weights_on_tape(tape, w, false), x, dim, act);
        auto f = [&](double dx) {
          Eigen::VectorXd xx = x;
          xx[dim] += dx;
          return nets::main_net_forward(xx, w, act)[0];
        };
        const double fd1 = (f(1e-5) - f(-1e-5)) / 2e-5;
        const double fd2 = (f(1e-3) - 2 * f(0) + f(-1e-3)) / 1e-6;
        EXPECT_NEAR(d.u.scalar(), f(0), 1e-14);
        EXPECT_LT(std::abs(d.du.scalar() - fd1) / (1 + std::abs(fd1)), 1e-4);
        EXPECT_LT(std::abs(d.d2u.scalar() - fd2) / (1 + std::abs(fd2)), 1e-4);
      }
    }
  }
}

TEST(Tape, UnusedNodeHasZeroGradient) {
  ad::Tape tape;
  const Var a = tape.variable(Eigen::MatrixXd::Constant(2, 2, 1.5));
  const Var b = tape.variable(Eigen::MatrixXd::Constant(3, 1, 2.0));
  tape.backward(ad::sum(ad::square(a)));
  EXPECT_EQ(tape.grad(b), Eigen::MatrixXd::Zero(3, 1));
  EXPECT_EQ(tape.grad(a), Eigen::MatrixXd::Constant(2, 2, 3.0));
}

TEST(Tape, BackwardIsLinear) {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd w = test::randn(6, rng);
  auto f = [](ad::Tape&, const Var& p) { return ad::sum(ad::square(p)); };
  auto g = [](ad::Tape&, const Var& p) { return ad::mean(ad::mul(p, ad::scale(p, 3.0))); };
  auto fg = [&](ad::Tape& t, const Var& p) { return ad::add(f(t, p), g(t, p)); };
  const auto a = ad::grad(f, w), b = ad::grad(g, w), c = ad::grad(fg, w);
  EXPECT_LT((c.gradient - a.gradient - b.gradient).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Tape, Deterministic) {
  const nets::MainNetArch arch{2, 8, 2, 1};
  std::mt19937_64 rng(9);
  const Eigen::VectorXd theta = training::flatten_weights(test::random_net(arch, rng));
  const Eigen::MatrixXd x = test::randn(2, 16, rng);
  auto loss = [&](ad::Tape& tape, const Var& p) {
    const auto d = nets::forward_with_derivs(tape, layers_from_flat(p, arch.layers()), x, {{0, 2}}, nets::Activation::GELU);
    return ad::mean(ad::square(d.d2(0)));
  };
  const auto a = ad::grad(loss, theta), b = ad::grad(loss, theta);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.gradient, b.gradient);
}

TEST(Tape, NonFiniteValueNamesPrimitive) {
  ad::Tape tape;
  const Var a = tape.variable(Eigen::MatrixXd::Constant(1, 1, 1e300));
  try {
    ad::square(a);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("square"), std::string::npos);
  }
}

TEST(Tape, ConcatAndSliceGradients) {
  std::mt19937_64 rng(11);
  const Eigen::VectorXd w = test::randn(10, rng);
  auto f = [](ad::Tape&, const Var& p) {
    const Var a = ad::segment(p, 0, 2, 2);
    const Var b = ad::segment(p, 4, 2, 3);
    const Var c = ad::concat_cols(a, b);
    return ad::sum(ad::square(ad::slice_cols(c, 1, 3)));
  };
  const auto r = ad::grad(f, w);
  // slice keeps column 1 of a (entries 1, 3) and the first two columns of b
  // (entries 4, 5, 7, 8); entries 6, 9 fall outside.
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(10);
  for (int i : {1, 3, 4, 5, 7, 8}) expect[i] = 2 * w[i];
  EXPECT_LT((r.gradient - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Tape, InverseSpectrumMatchesNaiveSum) {
  std::mt19937_64 rng(13);
  const Eigen::Index n = 37, p = 9;
  const double gain = 2.5;
  const Eigen::VectorXd re = test::randn(p, rng), im = test::randn(p, rng);
  ad::Tape tape;
  const Var out = ad::inverse_spectrum(tape.variable(re), tape.variable(im), n, gain);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const double ang = 2 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
      s += re[k] * std::cos(ang) - im[k] * std::sin(ang);
    }
    EXPECT_NEAR(out.value()(j, 0), gain * s / n, 1e-13);
  }
  // gradient of a weighted sum against finite differences
  const Eigen::VectorXd c = test::randn(n, rng);
  auto f = [&](ad::Tape& t, const Var& q) {
    const Var w = ad::inverse_spectrum(ad::segment(q, 0, p, 1), ad::segment(q, p, p, 1), n, gain);
    return ad::sum(ad::mul(w, t.constant(c)));
  };
  Eigen::VectorXd q(2 * p);
  q << re, im;
  const auto r = ad::grad(f, q);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp[i] += 1e-6;
    qm[i] -= 1e-6;
    ad::Tape t1, t2;
    const double fd = (f(t1, t1.variable(qp)).scalar() - f(t2, t2.variable(qm)).scalar()) / 2e-6;
    EXPECT_NEAR(r.gradient[i], fd, 1e-8);
  }
}

TEST(Dual, ChainRule) {
  using ad::DualValue;
  const DualValue x = DualValue::variable(0.7);
  const DualValue y = x * x * x;  // x^3
  EXPECT_NEAR(y.tangent1, 3 * 0.49, 1e-15);
  EXPECT_NEAR(y.tangent2, 6 * 0.7, 1e-15);
  const DualValue s = ad::apply(nets::Activation::Sine, 2.0 * x);
  EXPECT_NEAR(s.tangent1, 2 * std::cos(1.4), 1e-15);
  EXPECT_NEAR(s.tangent2, -4 * std::sin(1.4), 1e-15);
  const DualValue c = DualValue::constant(4.0);
  EXPECT_EQ(c.tangent1, 0.0);
  EXPECT_EQ(c.tangent2, 0.0);
}
