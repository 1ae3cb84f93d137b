#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lfr {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the stream name; stable across platforms.
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named-stream splitter: every consumer of randomness (data, collocation,
/// init, ...) draws from its own stream derived from one run seed, so each
/// component can be reproduced in isolation.
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t run_seed) : seed_(run_seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t derive(std::string_view stream, std::uint64_t a = 0, std::uint64_t b = 0) const {
    std::uint64_t s = mix64(seed_ ^ hash_name(stream));
    s = mix64(s ^ mix64(a + 0x632be59bd9b4e019ULL));
    s = mix64(s ^ mix64(b + 0x85157af5ULL));
    return s;
  }

  Rng stream(std::string_view stream, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return Rng(derive(stream, a, b));
  }

 private:
  std::uint64_t seed_;
};

/// Normal draw truncated at +-2 standard deviations (rejection sampling).
inline double truncated_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (;;) {
    const double z = dist(rng);
    if (z >= -2.0 && z <= 2.0) return z * stddev;
  }
}

}  // namespace lfr
