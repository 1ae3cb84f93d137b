#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "lfr/analysis/analysis.hpp"
#include "lfr/errors.hpp"
#include "lfr/hypernet/codec.hpp"
#include "lfr/problems/grf.hpp"

using namespace lfr;
using namespace lfr::analysis;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd cosine(int n, int k, double amp = 1.0) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = amp * std::cos(2 * kPi * k * j / n);
  return v;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Metrics, RelativeL2) {
  Eigen::MatrixXd t(2, 2);
  t << 1, 2, 3, 4;
  EXPECT_EQ(relative_l2(t, t), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2(Eigen::MatrixXd::Zero(2, 2), t), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2(2 * t, t), 1.0);
  Eigen::MatrixXd p = t;
  p(0, 0) += 1.0;
  EXPECT_DOUBLE_EQ(relative_l2(p, t), 1.0 / std::sqrt(30.0));
  EXPECT_THROW(relative_l2(t, Eigen::MatrixXd::Zero(2, 2)), DomainError);
  EXPECT_THROW(relative_l2(t, Eigen::MatrixXd::Ones(2, 3)), ShapeError);
}

TEST(Metrics, FrequencyErrorMatchesNaiveDft) {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd truth = test::randn(40, rng), pred = truth + test::randn(40, rng, 0.1);
  const auto fe = frequency_error(pred, truth);
  const auto ft = test::naive_dft(truth), fp = test::naive_dft(pred);
  ASSERT_EQ(fe.k.size(), 21u);
  for (std::size_t i = 0; i < fe.k.size(); ++i) {
    const auto k = static_cast<std::size_t>(fe.k[i]);
    EXPECT_EQ(fe.k[i], static_cast<int>(i));
    EXPECT_NEAR(fe.delta[i], std::abs(ft[k] - fp[k]) / std::abs(ft[k]), 1e-10);
  }
}

TEST(Metrics, FrequencyErrorLocalizesPerturbation) {
  const int n = 64;
  Eigen::VectorXd truth = Eigen::VectorXd::Constant(n, 1.0);
  for (int k = 1; k <= 32; ++k) truth += cosine(n, k, 1.0 / k);
  const Eigen::VectorXd pred = truth + cosine(n, 5, 0.02);
  const auto fe = frequency_error(pred, truth);
  for (std::size_t i = 0; i < fe.k.size(); ++i) {
    if (fe.k[i] == 5) {
      EXPECT_NEAR(fe.delta[i], 0.1, 1e-10);
    } else {
      EXPECT_LT(fe.delta[i], 1e-10);
    }
  }
}

TEST(Metrics, FrequencyErrorMasksEmptyBins) {
  const auto truth = cosine(32, 3);
  const auto fe = frequency_error(truth * 1.5, truth);
  ASSERT_EQ(fe.k, std::vector<int>{3});
  EXPECT_NEAR(fe.delta[0], 0.5, 1e-12);
}

TEST(Metrics, FrequencyErrorTrace) {
  FrequencyErrorTrace trace({1, 2});
  const Eigen::VectorXd truth = cosine(16, 1) + cosine(16, 2);
  trace.record(0, Eigen::VectorXd::Zero(16), truth);
  trace.record(10, truth + cosine(16, 2, 0.5), truth);
  const auto d = trace.delta();
  ASSERT_EQ(d.rows(), 2);
  EXPECT_NEAR(d(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(d(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(d(1, 1), 0.5, 1e-12);
  const auto csv = trace.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,k,delta");
  EXPECT_EQ(count_lines(csv), 5u);
  EXPECT_THROW(trace.record(20, truth, cosine(16, 1)), DomainError);
}

TEST(Theorem1, BandLimitedVector) {
  EXPECT_EQ(verify_theorem1(Eigen::VectorXd::Constant(50, 3.0), 1e-9), 1u);
  EXPECT_EQ(verify_theorem1(cosine(64, 3), 1e-9), 4u);
  EXPECT_EQ(verify_theorem1(cosine(64, 3), 10.0), 1u);
}

TEST(Theorem1, ExactRecoveryNeedsHalfSpectrum) {
  std::mt19937_64 rng(4);
  EXPECT_EQ(verify_theorem1(test::randn(64, rng), 0.0), 33u);
  EXPECT_EQ(verify_theorem1(test::randn(65, rng), 0.0), 33u);
}

TEST(Theorem1, MatchesBruteForceScan) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd w = test::randn(48, rng);
    const double eps = std::abs(test::randn(1, rng)[0]) * 2.0;
    std::size_t brute = 48;
    for (std::size_t p = 1; p <= 48; ++p) {
      if (hyper::codec_roundtrip_error(w, p) <= eps) {
        brute = p;
        break;
      }
    }
    EXPECT_EQ(verify_theorem1(w, eps), brute) << eps;
  }
}

TEST(Theorem2, SelectTauAndAlpha) {
  const Eigen::Vector4d g1(4, 1, -2, 1), g2(1, 1, 1, 0);
  EXPECT_EQ(select_tau(g1, g2), 0);
  // r = 4, G1 = 4, G2 = 2: min{1 * 0.5 / (4 + 8 - 1), 4 / 4}
  EXPECT_DOUBLE_EQ(theorem2_alpha(g1, g2, 0, 0.5), 0.5 / 11.0);
}

TEST(Theorem2, ChainRuleLhs) {
  Theorem2Instance inst;
  inst.g1 = Eigen::Vector4d(4, 1, 1, 1);
  inst.g2 = Eigen::Vector4d(1, 1, 1, 1);
  inst.tau = 0;
  inst.eps = 0.5;
  inst.alpha = theorem2_alpha(inst.g1, inst.g2, 0, 0.5);
  inst.b = Eigen::MatrixXd(1, 4);
  const double a = 0.9 * inst.alpha;
  inst.b << 1, -a, -a, -a;
  inst.lambda = Eigen::MatrixXd::Ones(4, 1);
  EXPECT_NO_THROW(inst.validate());
  const auto r = verify_theorem2(inst);
  EXPECT_DOUBLE_EQ(r.rhs_max_ratio, 4.0);
  EXPECT_NEAR(r.lhs_ratio, (4 - 3 * a) / (1 - 3 * a), 1e-14);
  EXPECT_TRUE(r.holds);

  auto bad = inst;
  bad.b(0, 1) = 2 * inst.alpha;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Theorem2, RandomInstancesMatchIndependentLhs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = make_theorem2_instance(32, 4, 0.1, 1.0, seed);
    EXPECT_NO_THROW(inst.validate());
    const auto r = verify_theorem2(inst);
    if (r.skipped) continue;
    double lhs = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < inst.m(); ++j) {
      double num = 0.0, den = 0.0;
      for (Eigen::Index t = 0; t < inst.d(); ++t) {
        num += inst.b(j, t) * inst.g1[t];
        den += inst.b(j, t) * inst.g2[t];
      }
      lhs = std::min(lhs, std::abs(num / den));
    }
    EXPECT_NEAR(r.lhs_ratio, lhs, 1e-12 * std::max(1.0, lhs));
    EXPECT_TRUE(r.holds) << seed;
  }
}

TEST(Theorem2, SweepHoldsAtBoundAndBreaksPastIt) {
  const auto ok = theorem2_sweep(200, 64, 8, 0.05, 1.0, 3);
  EXPECT_EQ(ok.instances, 200);
  EXPECT_EQ(ok.held + ok.skipped, 200);
  EXPECT_TRUE(ok.counterexamples.empty());
  EXPECT_EQ(count_lines(ok.csv), 201u);

  const auto loose = theorem2_sweep(200, 64, 8, 0.05, 20.0, 3);
  EXPECT_FALSE(loose.counterexamples.empty());
}

TEST(Spectrum, ReportRowsAndDc) {
  std::mt19937_64 rng(6);
  const auto w = test::random_net({1, 4, 2, 1}, rng);
  const auto csv = weight_spectrum_report(w);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "layer,k,re,im,magnitude");
  std::getline(in, line);
  // layer 0, k = 0: the plain sum of the flattened layer
  const double sum = w.layers[0].flatten().sum();
  double re = 0.0;
  ASSERT_EQ(std::sscanf(line.c_str(), "0,0,%lf", &re), 1);
  EXPECT_NEAR(re, sum, 1e-12);
  EXPECT_EQ(count_lines(csv), 1u + 8 + 20 + 4);
}

TEST(Continuity, LayerDistancesAndProfile) {
  std::mt19937_64 rng(7);
  const auto a = test::random_net({2, 3, 2, 1}, rng), b = test::random_net({2, 3, 2, 1}, rng);
  const auto d = layer_l1(a, b);
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    double ref = (a.layers[l].w - b.layers[l].w).cwiseAbs().sum();
    if (a.layers[l].has_bias()) ref += (a.layers[l].b - b.layers[l].b).cwiseAbs().sum();
    EXPECT_NEAR(d[l], ref, 1e-14);
  }
  EXPECT_EQ(layer_l1(a, a), std::vector<double>(3, 0.0));
  const auto g = gaussian_profile(Eigen::Vector2d(0.5, 1.5), 0.5);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_NEAR(g[1], std::exp(-0.5), 1e-15);
}

TEST(Ablation, EpochMeansAndArms) {
  std::vector<training::HistoryRow> h(6);
  for (int i = 0; i < 6; ++i) h[i].loss.total = i;
  EXPECT_EQ(epoch_means(h, 3), (std::vector<double>{1.0, 4.0}));
  EXPECT_THROW(epoch_means(h, 4), ShapeError);

  auto cfg = training::TrainConfig::preset(physics::Benchmark::Antiderivative);
  cfg.arch = {1, 8, 2, 1};
  cfg.hyper.width = 8;
  cfg.hyper.hidden_layers = 1;
  cfg.codec = {4, 16, 4};
  cfg.counts = {16, 1, 1};
  cfg.epochs_pretrain = 3;
  const auto sensors = physics::SensorGrid::uniform(10, false);
  std::vector<physics::ParameterSample> data;
  for (int i = 0; i < 2; ++i) data.push_back({problems::grf_sample({0.2}, sensors, i), sensors});
  const auto rep = ablation_study(data, cfg, {hyper::HyperMode::FourierReduced, hyper::HyperMode::FullSpectrum});
  ASSERT_EQ(rep.arms.size(), 2u);
  for (const auto& arm : rep.arms) {
    EXPECT_EQ(arm.epoch_loss.size(), 3u);
    EXPECT_EQ(arm.params, hyper::parameter_count(cfg.arch, cfg.codec, cfg.hyper, 10, arm.mode).hyper_params);
  }
  const auto csv = rep.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,mode,loss");
  EXPECT_EQ(count_lines(csv), 7u);
}

TEST(Metrics, ScaleCovariance) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd t = test::randn(5, 7, rng), p = test::randn(5, 7, rng);
  for (double c : {-3.0, 1e-3, 250.0}) EXPECT_NEAR(relative_l2(c * p, c * t), relative_l2(p, t), 1e-13);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    num += (p.data()[i] - t.data()[i]) * (p.data()[i] - t.data()[i]);
    den += t.data()[i] * t.data()[i];
  }
  EXPECT_NEAR(relative_l2(p, t), std::sqrt(num / den), 1e-12 * std::sqrt(num / den));
}

TEST(Metrics, FrequencyErrorDetectsShift) {
  std::mt19937_64 rng(9);
  const Eigen::VectorXd truth = test::randn(32, rng);
  Eigen::VectorXd shifted(32);
  for (int j = 0; j < 32; ++j) shifted[j] = truth[(j + 1) % 32];
  const auto fe = frequency_error(shifted, truth);
  EXPECT_GT(*std::max_element(fe.delta.begin(), fe.delta.end()), 0.1);
  const auto zero = frequency_error(Eigen::VectorXd::Zero(32), truth);
  for (double d : zero.delta) EXPECT_NEAR(d, 1.0, 1e-12);
}

TEST(Theorem1, NonIncreasingInEps) {
  std::mt19937_64 rng(10);
  const Eigen::VectorXd w = test::randn(100, rng);
  std::size_t prev = 101;
  for (double eps = 0.0; eps < 12.0; eps += 0.25) {
    const auto p = verify_theorem1(w, eps);
    EXPECT_LE(p, prev);
    EXPECT_LE(hyper::codec_roundtrip_error(w, p), eps + 1e-12);
    if (p > 1) EXPECT_GT(hyper::codec_roundtrip_error(w, p - 1), eps);
    prev = p;
  }
}

TEST(Theorem2, DegenerateSingleRow) {
  std::mt19937_64 rng(11);
  Theorem2Instance inst;
  inst.g1 = test::randn(16, rng);
  inst.g2 = test::randn(16, rng);
  inst.tau = select_tau(inst.g1, inst.g2);
  inst.eps = 0.0;
  inst.alpha = 1e-3;
  inst.b = Eigen::MatrixXd::Zero(1, 16);
  inst.b(0, inst.tau) = 1.0;
  inst.lambda = Eigen::MatrixXd::Ones(16, 1);
  const auto r = verify_theorem2(inst);
  EXPECT_EQ(r.lhs_ratio, r.rhs_max_ratio);
  EXPECT_DOUBLE_EQ(r.rhs_max_ratio, std::abs(inst.g1[inst.tau] / inst.g2[inst.tau]));
  EXPECT_TRUE(r.holds);
}

TEST(Spectrum, ConstantLayerIsDcOnly) {
  nets::MainNetWeights w;
  w.layers.push_back({Eigen::MatrixXd::Constant(2, 1, 0.5), Eigen::VectorXd::Constant(2, 0.5)});
  w.layers.push_back({Eigen::MatrixXd::Constant(1, 2, 0.5), Eigen::VectorXd()});
  std::istringstream in(weight_spectrum_report(w));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    int layer = 0, k = 0;
    double re = 0, im = 0, mag = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &layer, &k, &re, &im, &mag), 5);
    EXPECT_NEAR(mag, k == 0 ? 0.5 * (layer == 0 ? 4 : 2) : 0.0, 1e-15);
    ++rows;
  }
  EXPECT_EQ(rows, 6);
}
