#include <benchmark/benchmark.h>

#include <random>

#include "lfr/hypernet/codec.hpp"
#include "lfr/hypernet/hypernet.hpp"
#include "lfr/nets/main_net.hpp"
#include "lfr/physics/pde.hpp"
#include "lfr/problems/dataset.hpp"
#include "lfr/spectral/fft.hpp"
#include "lfr/training/train.hpp"

using namespace lfr;

namespace {

Eigen::VectorXd noise(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// 4160 = 64 x 64 + 64, one hidden layer of the reference main network.
void BM_Fft(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& plan = spectral::plan_for(n);
  const Eigen::VectorXd x = noise(static_cast<Eigen::Index>(n), 1);
  std::vector<spectral::Complex> buf(n);
  for (auto _ : state) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[static_cast<Eigen::Index>(i)];
    plan.forward(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fft)->Arg(128)->Arg(1024)->Arg(4160)->Arg(16512);

void BM_SpectrumToWeights(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  hyper::WeightSpectrum s{noise(static_cast<Eigen::Index>(p), 2), noise(static_cast<Eigen::Index>(p), 3), 4160};
  for (auto _ : state) benchmark::DoNotOptimize(hyper::spectrum_to_weights(s));
}
BENCHMARK(BM_SpectrumToWeights)->Arg(32)->Arg(2048);

void BM_TruncationProfile(benchmark::State& state) {
  const Eigen::VectorXd w = noise(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(hyper::truncation_error_profile(w));
}
BENCHMARK(BM_TruncationProfile)->Arg(4160);

// Forward pass with d/dx and d2/dx2 carried through, plus the backward sweep.
void BM_TapedDerivatives(benchmark::State& state) {
  const nets::MainNetArch arch{2, static_cast<int>(state.range(0)), 4, 1};
  const auto w = training::xavier_init(arch, 5);
  Eigen::MatrixXd x = (noise(2 * 1024, 6).array() * 0.3 + 0.5).matrix().reshaped(2, 1024);
  for (auto _ : state) {
    ad::Tape t;
    const auto layers = nets::weights_on_tape(t, w, true);
    const auto d = nets::forward_with_derivs(t, layers, x, {{0, 2}, {1, 1}}, nets::Activation::GELU);
    t.backward(ad::mean(ad::square(d.d1(1) - d.d2(0))));
    benchmark::DoNotOptimize(t.grad(layers[0].w).data());
  }
}
BENCHMARK(BM_TapedDerivatives)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// One pre-training epoch over a single anti-derivative sample at the
// reference configuration: hypernetwork forward, reconstruction, physics
// loss, backward, Adam.
void BM_PretrainStep(benchmark::State& state) {
  auto cfg = training::TrainConfig::preset(physics::Benchmark::Antiderivative);
  cfg.mode = static_cast<hyper::HyperMode>(state.range(0));
  const auto spec = problems::BenchmarkSpec::preset(cfg.benchmark);
  const auto data = problems::generate_dataset(spec, 1, 7);
  const std::vector<physics::ParameterSample> samples = {data.sample(0)};
  auto st = training::init_state(cfg, spec.m);
  for (auto _ : state) {
    cfg.epochs_pretrain = static_cast<int>(st.epoch) + 1;
    training::pretrain(st, samples, cfg);
  }
  state.SetLabel(std::string(hyper::mode_name(cfg.mode)));
}
BENCHMARK(BM_PretrainStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_GenerateSample(benchmark::State& state) {
  const auto spec = problems::BenchmarkSpec::preset(static_cast<physics::Benchmark>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(problems::generate_dataset(spec, 1, ++seed));
  state.SetLabel(std::string(physics::benchmark_name(spec.kind)));
}
BENCHMARK(BM_GenerateSample)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
