#include <gtest/gtest.h>

#include "lfr/errors.hpp"
#include "run_config.hpp"

namespace lfr::cli {
namespace {

using nlohmann::json;

json minimal() { return {{"schema_version", 1}}; }

TEST(RunConfig, EmptyConfigIsThePreset) {
  const auto c = RunConfig::from_json(minimal());
  const auto p = training::TrainConfig::preset(physics::Benchmark::Antiderivative);
  EXPECT_EQ(c.train.arch.width, p.arch.width);
  EXPECT_EQ(c.train.codec.p_hidden, p.codec.p_hidden);
  EXPECT_EQ(c.data.m, problems::BenchmarkSpec::preset(physics::Benchmark::Antiderivative).m);
}

TEST(RunConfig, SchemaVersionRequired) {
  EXPECT_THROW(RunConfig::from_json(json::object()), ConfigError);
  EXPECT_THROW(RunConfig::from_json({{"schema_version", 2}}), ConfigError);
}

TEST(RunConfig, UnknownKeysRejected) {
  auto j = minimal();
  j["sead"] = 3;
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["main"] = {{"width", 8}, {"depth", 2}};
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
}

TEST(RunConfig, WrongTypesRejected) {
  auto j = minimal();
  j["seed"] = -1;
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["main"] = {{"width", 8.5}};
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["schedule"] = {{"unit", "fortnights"}};
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["reports"] = {{"spectrum", 1}};
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
}

TEST(RunConfig, InvalidValuesRejectedBeforeCompute) {
  auto j = minimal();
  j["main"] = {{"width", 0}};
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
  j = minimal();
  j["benchmark"] = "navier-stokes";
  EXPECT_THROW(RunConfig::from_json(j), ConfigError);
}

TEST(RunConfig, ConstantsReachTheSolvers) {
  auto j = minimal();
  j["benchmark"] = "diffusion";
  j["constants"] = {{"d", 0.02}, {"k", 0.03}};
  const auto c = RunConfig::from_json(j);
  EXPECT_EQ(c.data.diffusion.d, 0.02);
  EXPECT_EQ(c.data.diffusion.k, 0.03);
  EXPECT_EQ(c.train.arch.in_dim, 2);
}

TEST(RunConfig, PathsResolveAgainstTheConfigDirectory) {
  auto j = minimal();
  j["datasets"] = {{"train", "data/a.lfrd"}, {"test", "/abs/b.lfrd"}};
  j["out_dir"] = "runs/x";
  const auto c = RunConfig::from_json(j, "/cfg");
  EXPECT_EQ(c.dataset("train"), std::filesystem::path("/cfg/data/a.lfrd"));
  EXPECT_EQ(c.dataset("test"), std::filesystem::path("/abs/b.lfrd"));
  EXPECT_EQ(c.out_dir, std::filesystem::path("/cfg/runs/x"));
  EXPECT_THROW(c.dataset("valid"), ConfigError);
}

TEST(RunConfig, CanonicalFormRoundTrips) {
  auto j = minimal();
  j["benchmark"] = "burgers";
  j["seed"] = 99;
  j["mode"] = "single_hyper";
  j["schedule"] = {{"lr0", 2e-3}, {"unit", "steps"}};
  j["reports"] = {{"freq_k", {1, 3}}};
  const auto a = RunConfig::from_json(j);
  const auto b = RunConfig::from_json(a.to_json());
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(b.train.seed, 99u);
  EXPECT_EQ(b.train.mode, hyper::HyperMode::SingleHyper);
  EXPECT_EQ(b.reports.freq_k, (std::vector<int>{1, 3}));
}

}  // namespace
}  // namespace lfr::cli
