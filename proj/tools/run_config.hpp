#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfr/problems/dataset.hpp"
#include "lfr/training/train.hpp"

namespace lfr::cli {

inline constexpr int kSchemaVersion = 1;

/// Optional report outputs written next to a pre-training run.
struct ReportToggles {
  bool spectrum = false;     ///< weight spectra of the first training sample
  bool params = true;        ///< parameter accounting JSON
  int freq_every = 10;       ///< steps between frequency-error snapshots
  std::vector<int> freq_k = {1, 2, 4, 8, 16};
};

/// Everything one run needs. Parsed from JSON; every key is optional and
/// defaults to the benchmark preset, but unknown keys are rejected.
struct RunConfig {
  training::TrainConfig train;
  problems::BenchmarkSpec data;
  std::map<std::string, std::filesystem::path> datasets;  ///< split name -> LFRD file
  std::filesystem::path out_dir = ".";
  ReportToggles reports;

  static RunConfig defaults(physics::Benchmark kind);
  /// Relative dataset and output paths are resolved against `base`.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static RunConfig load(const std::filesystem::path& path);
  /// Canonical form: every field, keys sorted. from_json(to_json()) round trips.
  nlohmann::json to_json() const;
  void validate() const;

  const std::filesystem::path& dataset(const std::string& split) const;
};

/// Pretty-printed JSON with a trailing newline, the form every command writes.
std::string dump(const nlohmann::json& j);

}  // namespace lfr::cli
