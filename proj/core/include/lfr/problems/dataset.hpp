#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lfr/physics/pde.hpp"
#include "lfr/problems/grf.hpp"
#include "lfr/problems/solvers.hpp"

namespace lfr::problems {

/// Data-side settings of one benchmark: how eta is drawn, where it is
/// sensed, and the lattice and solver used for reference fields.
struct BenchmarkSpec {
  physics::Benchmark kind = physics::Benchmark::Antiderivative;
  int m = 100;
  int nx = 100;
  int nt = 100;  ///< forced to 1 for the anti-derivative
  GrfSpec grf;
  Rk45Options rk45;
  AdvectionOptions advection;
  BurgersOptions burgers;
  DiffusionOptions diffusion;

  /// Length scales 0.2 (0.2, 2.5, 0.2 for advection, Burgers, diffusion),
  /// m = 100, 100 x 100 lattices.
  static BenchmarkSpec preset(physics::Benchmark kind);
  physics::SensorGrid sensors() const;
  void validate() const;
};

/// Reference solve for one eta on the spec's lattice.
ReferenceSolution solve_reference(const BenchmarkSpec& spec, const physics::ParameterSample& eta);

struct Dataset {
  physics::Benchmark kind = physics::Benchmark::Antiderivative;
  physics::SensorGrid sensors;
  int nx = 0;
  int nt = 0;
  std::vector<Eigen::VectorXd> eta;
  std::vector<Eigen::MatrixXd> fields;  ///< nt x nx each

  std::size_t size() const { return eta.size(); }
  physics::ParameterSample sample(std::size_t i) const { return {eta.at(i), sensors}; }
  /// Lattice points as columns (row 0 = x, row 1 = t), column j * nx + i.
  Eigen::MatrixXd lattice_points() const;
  /// Row-major flattening of field i, matching lattice_points().
  Eigen::VectorXd flat_field(std::size_t i) const;
  void validate() const;
};

struct SampleRecord {
  std::uint64_t seed = 0;
  long solver_steps = 0;
  double jitter = 0.0;
};

/// Draws n fields from the named "data" stream (one sub-stream per sample)
/// and solves each. Samples are independent, so up to `threads` workers
/// share the loop without affecting the result.
Dataset generate_dataset(const BenchmarkSpec& spec, std::size_t n, std::uint64_t seed, int threads = 1,
                         std::vector<SampleRecord>* records = nullptr);

/// Binary layout documented in docs/formats.md ("LFRD").
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace lfr::problems
