#include "lfr/problems/dataset.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "lfr/errors.hpp"
#include "lfr/io/binary.hpp"
#include "lfr/rng.hpp"

namespace lfr::problems {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;

}  // namespace

BenchmarkSpec BenchmarkSpec::preset(physics::Benchmark kind) {
  BenchmarkSpec s;
  s.kind = kind;
  s.grf.length_scale = kind == physics::Benchmark::Burgers ? 2.5 : 0.2;
  if (kind == physics::Benchmark::Antiderivative) s.nt = 1;
  return s;
}

physics::SensorGrid BenchmarkSpec::sensors() const {
  return physics::SensorGrid::uniform(m, kind == physics::Benchmark::Burgers);
}

void BenchmarkSpec::validate() const {
  if (m < 2) throw ConfigError("sensor count m must be >= 2");
  if (nx < 2) throw ConfigError("lattice nx must be >= 2");
  if (kind == physics::Benchmark::Antiderivative) {
    if (nt != 1) throw ConfigError("the anti-derivative lattice has nt = 1");
  } else if (nt < 2) {
    throw ConfigError("lattice nt must be >= 2");
  }
}

ReferenceSolution solve_reference(const BenchmarkSpec& spec, const physics::ParameterSample& eta) {
  const Eigen::VectorXd x = lattice(spec.nx);
  switch (spec.kind) {
    case physics::Benchmark::Antiderivative: return solve_antiderivative_reference(eta, x, spec.rk45);
    case physics::Benchmark::Advection: return solve_advection_reference(eta, x, lattice(spec.nt), spec.advection);
    case physics::Benchmark::Burgers: return solve_burgers_reference(eta, x, lattice(spec.nt), spec.burgers);
    case physics::Benchmark::Diffusion: return solve_diffusion_reference(eta, spec.nx, spec.nt, spec.diffusion);
  }
  throw std::logic_error("unhandled benchmark");
}

Eigen::MatrixXd Dataset::lattice_points() const {
  const Eigen::VectorXd x = lattice(nx);
  if (kind == physics::Benchmark::Antiderivative) return x.transpose();
  const Eigen::VectorXd t = lattice(nt);
  Eigen::MatrixXd pts(2, static_cast<Eigen::Index>(nx) * nt);
  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < nx; ++i) {
      pts(0, static_cast<Eigen::Index>(j) * nx + i) = x[i];
      pts(1, static_cast<Eigen::Index>(j) * nx + i) = t[j];
    }
  }
  return pts;
}

Eigen::VectorXd Dataset::flat_field(std::size_t i) const {
  const Eigen::MatrixXd& f = fields.at(i);
  Eigen::VectorXd out(f.size());
  for (Eigen::Index j = 0; j < f.rows(); ++j) out.segment(j * f.cols(), f.cols()) = f.row(j).transpose();
  return out;
}

void Dataset::validate() const {
  if (eta.size() != fields.size()) throw ShapeError("dataset eta and field counts differ");
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i].size() != sensors.x.size()) throw ShapeError("dataset sample has the wrong eta length");
    if (fields[i].rows() != nt || fields[i].cols() != nx) throw ShapeError("dataset field has the wrong shape");
  }
}

Dataset generate_dataset(const BenchmarkSpec& spec, std::size_t n, std::uint64_t seed, int threads,
                         std::vector<SampleRecord>* records) {
  spec.validate();
  if (n == 0) throw ConfigError("dataset size must be >= 1");
  const physics::SensorGrid sensors = spec.sensors();
  const GrfSampler sampler(spec.grf, sensors);
  const SeedSplitter split(seed);

  Dataset d;
  d.kind = spec.kind;
  d.sensors = sensors;
  d.nx = spec.nx;
  d.nt = spec.nt;
  d.eta.resize(n);
  d.fields.resize(n);
  std::vector<SampleRecord> recs(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const std::uint64_t s = split.derive("data", i);
        Rng rng(s);
        d.eta[i] = sampler.sample(rng);
        const auto ref = solve_reference(spec, {d.eta[i], sensors});
        d.fields[i] = ref.values;
        recs[i] = {s, ref.steps, sampler.jitter_used()};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  if (records) *records = std::move(recs);
  return d;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  io::Writer w;
  w.tag("LFRD");
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.kind));
  w.u32(static_cast<std::uint32_t>(data.sensors.x.size()));
  w.u32(static_cast<std::uint32_t>(data.nx));
  w.u32(static_cast<std::uint32_t>(data.nt));
  w.u32(data.sensors.periodic ? 1u : 0u);
  w.u64(data.size());
  w.f64s(data.sensors.x.data(), static_cast<std::size_t>(data.sensors.x.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    w.f64s(data.eta[i].data(), static_cast<std::size_t>(data.eta[i].size()));
    const Eigen::VectorXd flat = data.flat_field(i);
    w.f64s(flat.data(), static_cast<std::size_t>(flat.size()));
  }
  io::write_file_atomic(path, w.data());
}

Dataset read_dataset(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path));
  r.expect_tag("LFRD");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) throw IoError("unsupported dataset version " + std::to_string(version));
  Dataset d;
  try {
    d.kind = physics::benchmark_from_id(static_cast<int>(r.u32()));
  } catch (const ConfigError& e) {
    throw IoError(std::string("dataset header: ") + e.what());
  }
  const std::uint32_t m = r.u32();
  d.nx = static_cast<int>(r.u32());
  d.nt = static_cast<int>(r.u32());
  d.sensors.periodic = r.u32() != 0;
  const std::uint64_t n = r.u64();
  if (m == 0 || d.nx <= 0 || d.nt <= 0) throw IoError("dataset header has empty dimensions");
  d.sensors.x.resize(m);
  r.f64s(d.sensors.x.data(), m);
  const std::size_t cells = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.nt);
  for (std::uint64_t i = 0; i < n; ++i) {
    Eigen::VectorXd eta(m);
    r.f64s(eta.data(), m);
    Eigen::VectorXd flat(static_cast<Eigen::Index>(cells));
    r.f64s(flat.data(), cells);
    Eigen::MatrixXd field(d.nt, d.nx);
    for (int j = 0; j < d.nt; ++j) field.row(j) = flat.segment(static_cast<Eigen::Index>(j) * d.nx, d.nx).transpose();
    d.eta.push_back(std::move(eta));
    d.fields.push_back(std::move(field));
  }
  if (!r.done()) throw IoError("trailing bytes after dataset records");
  return d;
}

}  // namespace lfr::problems
