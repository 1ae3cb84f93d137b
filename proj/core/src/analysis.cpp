#include "lfr/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "lfr/errors.hpp"
#include "lfr/hypernet/codec.hpp"
#include "lfr/problems/solvers.hpp"
#include "lfr/rng.hpp"
#include "lfr/spectral/fft.hpp"

namespace lfr::analysis {

namespace {

std::vector<spectral::Complex> spectrum(const Eigen::VectorXd& x) {
  return spectral::dft_real(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

void append(std::string& out, const char* fmt, auto... args) {
  char line[256];
  std::snprintf(line, sizeof line, fmt, args...);
  out += line;
}

}  // namespace

double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw ShapeError("relative_l2: prediction and truth differ in shape");
  }
  const double denom = truth.norm();
  if (!(denom > 0.0)) throw DomainError("relative_l2 is undefined for a zero truth field");
  return (pred - truth).norm() / denom;
}

FrequencyError frequency_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, double mask_tol) {
  if (pred.size() != truth.size()) throw ShapeError("frequency_error: signals differ in length");
  if (truth.size() == 0) throw ShapeError("frequency_error: empty signal");
  const auto ft = spectrum(truth);
  const auto fp = spectrum(pred);
  const int half = static_cast<int>(truth.size() / 2);
  double peak = 0.0;
  for (int k = 0; k <= half; ++k) peak = std::max(peak, std::abs(ft[k]));
  FrequencyError out;
  for (int k = 0; k <= half; ++k) {
    const double mag = std::abs(ft[k]);
    if (!(mag > mask_tol * peak) || mag == 0.0) continue;
    out.k.push_back(k);
    out.delta.push_back(std::abs(ft[k] - fp[k]) / mag);
  }
  return out;
}

FrequencyErrorTrace::FrequencyErrorTrace(std::vector<int> k_values) : k_(std::move(k_values)) {
  if (k_.empty()) throw ConfigError("frequency trace needs at least one k");
  for (int k : k_) {
    if (k < 0) throw ConfigError("frequency indices must be >= 0");
  }
}

void FrequencyErrorTrace::record(long step, const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw ShapeError("frequency trace: signals differ in length");
  const auto ft = spectrum(truth);
  const auto fp = spectrum(pred);
  double peak = 0.0;
  for (Eigen::Index k = 0; k <= truth.size() / 2; ++k) peak = std::max(peak, std::abs(ft[k]));
  std::vector<double> row;
  for (int k : k_) {
    if (k > truth.size() / 2) throw DomainError("tracked k exceeds the Nyquist index");
    const double mag = std::abs(ft[k]);
    if (mag <= 1e-12 * peak) throw DomainError("truth spectrum vanishes at k = " + std::to_string(k));
    row.push_back(std::abs(ft[k] - fp[k]) / mag);
  }
  steps_.push_back(step);
  rows_.push_back(std::move(row));
}

Eigen::MatrixXd FrequencyErrorTrace::delta() const {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(k_.size()));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t j = 0; j < k_.size(); ++j) d(i, j) = rows_[i][j];
  }
  return d;
}

std::string FrequencyErrorTrace::csv() const {
  std::string out = "step,k,delta\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t j = 0; j < k_.size(); ++j) append(out, "%ld,%d,%.17g\n", steps_[i], k_[j], rows_[i][j]);
  }
  return out;
}

std::size_t verify_theorem1(const Eigen::VectorXd& w, double eps) {
  if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
  if (w.size() == 0) throw ShapeError("verify_theorem1: empty weight vector");
  const auto profile = hyper::truncation_error_profile(w);
  for (std::size_t p = 1; p <= profile.size(); ++p) {
    if (profile[p - 1] <= eps) return p;
  }
  return profile.size();
}

void Theorem2Instance::validate() const {
  const Eigen::Index dd = d();
  if (g2.size() != dd) throw ConfigError("gradient vectors differ in length");
  if (b.cols() != dd) throw ConfigError("B must have d columns");
  if (lambda.rows() != dd || lambda.cols() != m()) throw ConfigError("Lambda must be d x M");
  if (m() < 1) throw ConfigError("M must be >= 1");
  if (m() > 1 && 4 * m() > dd) throw ConfigError("M must be at most d/4");
  if (tau < 0 || tau >= dd) throw ConfigError("tau is out of range");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
  for (Eigen::Index j = 0; j < m(); ++j) {
    if (b(j, tau) != 1.0) throw ConfigError("b_{j tau} must be 1");
    for (Eigen::Index t = 0; t < dd; ++t) {
      if (t != tau && !(std::abs(b(j, t)) < alpha)) throw ConfigError("off-tau entries of B must stay below alpha");
    }
  }
}

Eigen::Index select_tau(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2) {
  Eigen::Index tau = -1;
  double best = -1.0;
  for (Eigen::Index t = 0; t < g1.size(); ++t) {
    if (g2[t] == 0.0) continue;
    const double r = std::abs(g1[t] / g2[t]);
    if (r > best) {
      best = r;
      tau = t;
    }
  }
  if (tau < 0) throw DomainError("every k2 gradient entry vanishes");
  return tau;
}

double theorem2_alpha(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2, Eigen::Index tau, double eps) {
  const double a = std::abs(g1[tau]);
  const double c = std::abs(g2[tau]);
  if (c == 0.0) throw DomainError("g2 vanishes at tau");
  const double r = a / c;
  if (eps > r) throw ConfigError("eps must not exceed the ratio at tau");
  const double big1 = g1.cwiseAbs().sum() - a;
  const double big2 = g2.cwiseAbs().sum() - c;
  const double first = c * eps / (big1 + big2 * r - big2 * eps);
  const double second = big1 > 0.0 ? a / big1 : std::numeric_limits<double>::infinity();
  return std::min(first, second);
}

Theorem2Instance make_theorem2_instance(int d, int m, double eps, double inflate, std::uint64_t seed) {
  if (d < 4 || m < 1 || (m > 1 && 4 * m > d)) throw ConfigError("theorem 2 instances need 1 <= M <= d/4");
  if (!(inflate > 0.0)) throw ConfigError("alpha inflation must be > 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Theorem2Instance inst;
  inst.eps = eps;
  inst.g1.resize(d);
  inst.g2.resize(d);
  for (int t = 0; t < d; ++t) {
    inst.g1[t] = normal(rng);
    inst.g2[t] = normal(rng);
  }
  inst.lambda.resize(d, m);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < m; ++j) inst.lambda(i, j) = normal(rng);
  }
  inst.tau = select_tau(inst.g1, inst.g2);
  inst.alpha = inflate * theorem2_alpha(inst.g1, inst.g2, inst.tau, eps);
  // entries stay strictly inside the open interval (-alpha, alpha)
  const double edge = inst.alpha * (1.0 - 1e-6);
  std::uniform_real_distribution<double> uni(-edge, edge);
  inst.b.resize(m, d);
  const double s1 = inst.g1[inst.tau] < 0 ? -1.0 : 1.0;
  const double s2 = inst.g2[inst.tau] < 0 ? -1.0 : 1.0;
  for (int j = 0; j < m; ++j) {
    for (int t = 0; t < d; ++t) {
      if (t == inst.tau) {
        inst.b(j, t) = 1.0;
      } else if (j == 0 && m > 1) {
        inst.b(j, t) = inst.g1[t] < 0 ? edge * s1 : -edge * s1;
      } else if (j == 1 && m > 1) {
        inst.b(j, t) = inst.g2[t] < 0 ? -edge * s2 : edge * s2;
      } else if (m == 1) {
        inst.b(j, t) = inst.g1[t] < 0 ? edge * s1 : -edge * s1;
      } else {
        inst.b(j, t) = uni(rng);
      }
    }
  }
  return inst;
}

Theorem2Result verify_theorem2(const Theorem2Instance& inst) {
  inst.validate();
  Theorem2Result res;
  const Eigen::VectorXd l1 = inst.b * inst.g1;
  const Eigen::VectorXd l2 = inst.b * inst.g2;
  res.rhs_max_ratio = -1.0;
  for (Eigen::Index t = 0; t < inst.d(); ++t) {
    if (inst.g2[t] == 0.0) continue;
    res.rhs_max_ratio = std::max(res.rhs_max_ratio, std::abs(inst.g1[t] / inst.g2[t]));
  }
  if (inst.g2[inst.tau] == 0.0 || res.rhs_max_ratio < 0.0) {
    res.skipped = true;
    res.note = "k2 gradient vanishes at tau";
    return res;
  }
  res.lhs_ratio = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < inst.m(); ++j) {
    if (l2[j] == 0.0) {
      res.skipped = true;
      res.note = "k2 gradient with respect to lambda vanishes in row " + std::to_string(j);
      return res;
    }
    res.lhs_ratio = std::min(res.lhs_ratio, std::abs(l1[j] / l2[j]));
  }
  const double slack = 1e-12 * std::max(1.0, res.rhs_max_ratio);
  res.holds = res.lhs_ratio >= res.rhs_max_ratio - inst.eps - slack;
  if (!res.holds) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "counterexample: lhs %.17g < rhs %.17g - eps %.3g", res.lhs_ratio,
                  res.rhs_max_ratio, inst.eps);
    res.note = buf;
  }
  return res;
}

Theorem2Sweep theorem2_sweep(int instances, int d, int m, double eps, double inflate, std::uint64_t seed) {
  if (instances < 1) throw ConfigError("sweep needs at least one instance");
  const SeedSplitter split(seed);
  Theorem2Sweep out;
  out.csv = "seed,alpha,lhs,rhs,holds\n";
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s = split.derive("theorem2", static_cast<std::uint64_t>(i));
    const auto inst = make_theorem2_instance(d, m, eps, inflate, s);
    const auto res = verify_theorem2(inst);
    ++out.instances;
    if (res.skipped) {
      ++out.skipped;
      append(out.csv, "%llu,%.17g,nan,nan,skipped\n", static_cast<unsigned long long>(s), inst.alpha);
      continue;
    }
    if (res.holds) {
      ++out.held;
    } else {
      out.counterexamples.push_back(s);
    }
    append(out.csv, "%llu,%.17g,%.17g,%.17g,%d\n", static_cast<unsigned long long>(s), inst.alpha, res.lhs_ratio,
           res.rhs_max_ratio, res.holds ? 1 : 0);
  }
  return out;
}

std::string weight_spectrum_report(const nets::MainNetWeights& weights) {
  std::string out = "layer,k,re,im,magnitude\n";
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const auto f = spectrum(weights.layers[l].flatten());
    for (std::size_t k = 0; k < f.size(); ++k) {
      append(out, "%zu,%zu,%.17g,%.17g,%.17g\n", l, k, f[k].real(), f[k].imag(), std::abs(f[k]));
    }
  }
  return out;
}

std::vector<double> layer_l1(const nets::MainNetWeights& a, const nets::MainNetWeights& b) {
  if (a.layers.size() != b.layers.size()) throw ShapeError("weight sets differ in depth");
  std::vector<double> out;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const Eigen::VectorXd fa = a.layers[l].flatten();
    const Eigen::VectorXd fb = b.layers[l].flatten();
    if (fa.size() != fb.size()) throw ShapeError("layer " + std::to_string(l) + " differs in shape");
    out.push_back((fa - fb).cwiseAbs().sum());
  }
  return out;
}

Eigen::VectorXd gaussian_profile(const Eigen::VectorXd& x, double x0) {
  return (-(x.array() - x0).square() / 2.0).exp().matrix();
}

std::string ContinuityReport::csv() const {
  std::string out = "layer,pair,l1\n";
  for (std::size_t p = 0; p < dist.size(); ++p) {
    for (std::size_t l = 0; l < dist[p].size(); ++l) append(out, "%zu,%zu,%.17g\n", l, p, dist[p][l]);
  }
  return out;
}

ContinuityReport continuity_study(const ContinuityConfig& cfg) {
  if (cfg.x0.size() < 2) throw ConfigError("continuity study needs at least two x0 values");
  if (cfg.check_every < 1 || cfg.max_epochs < 0) throw ConfigError("continuity budget must be positive");
  training::TrainConfig tc = cfg.train;
  tc.benchmark = physics::Benchmark::Burgers;
  tc.arch = cfg.arch;
  tc.seed = cfg.seed;
  tc.validate_main();

  const physics::SensorGrid sensors = physics::SensorGrid::uniform(100, true);
  const Eigen::VectorXd xs = problems::lattice(cfg.lattice);
  Eigen::MatrixXd pts(2, static_cast<Eigen::Index>(cfg.lattice) * cfg.lattice);
  for (int j = 0; j < cfg.lattice; ++j) {
    for (int i = 0; i < cfg.lattice; ++i) pts.col(static_cast<Eigen::Index>(j) * cfg.lattice + i) << xs[i], xs[j];
  }
  problems::BurgersOptions bo;
  bo.nu = tc.constants.nu;
  Eigen::VectorXd grid(bo.modes);
  for (int i = 0; i < bo.modes; ++i) grid[i] = static_cast<double>(i) / bo.modes;

  const nets::MainNetWeights init = training::xavier_init(cfg.arch, SeedSplitter(cfg.seed).derive("init.main"));
  ContinuityReport rep;
  rep.all_reached = true;
  for (double x0 : cfg.x0) {
    const auto ref = problems::solve_burgers_reference(gaussian_profile(grid, x0), xs, xs, bo);
    Eigen::RowVectorXd truth(ref.values.size());
    for (Eigen::Index j = 0; j < ref.values.rows(); ++j) {
      truth.segment(j * ref.values.cols(), ref.values.cols()) = ref.values.row(j);
    }
    const physics::ParameterSample eta{gaussian_profile(sensors.x, x0), sensors};
    ContinuityRun run;
    run.x0 = x0;
    auto error = [&](const nets::MainNetWeights& w) {
      return relative_l2(nets::main_net_forward_batch(pts, w, tc.activation), truth);
    };
    auto stop = [&](const nets::MainNetWeights& w, long epoch) {
      if (epoch % cfg.check_every != 0) return false;
      return error(w) < cfg.target;
    };
    const auto fit = training::train_main_net(eta, init, tc, cfg.max_epochs, cfg.lr, stop);
    run.weights = fit.weights;
    run.epochs = static_cast<long>(fit.history.size());
    run.rel_l2 = error(run.weights);
    run.reached_target = run.rel_l2 < cfg.target;
    rep.all_reached = rep.all_reached && run.reached_target;
    rep.runs.push_back(std::move(run));
  }
  for (std::size_t p = 0; p + 1 < rep.runs.size(); ++p) {
    rep.dist.push_back(layer_l1(rep.runs[p].weights, rep.runs[p + 1].weights));
  }
  if (rep.dist.size() >= 2) {
    for (std::size_t l = 0; l < rep.dist[0].size(); ++l) {
      if (rep.dist[0][l] < rep.dist[1][l]) ++rep.layers_ordered;
    }
    rep.majority = 2 * rep.layers_ordered > static_cast<int>(rep.dist[0].size());
  }
  return rep;
}

std::vector<double> epoch_means(const std::vector<training::HistoryRow>& history, std::size_t per_epoch) {
  if (per_epoch == 0) throw ConfigError("samples per epoch must be >= 1");
  if (history.size() % per_epoch != 0) throw ShapeError("history does not hold whole epochs");
  std::vector<double> out;
  for (std::size_t i = 0; i + per_epoch <= history.size(); i += per_epoch) {
    double s = 0.0;
    for (std::size_t j = 0; j < per_epoch; ++j) s += history[i + j].loss.total;
    out.push_back(s / static_cast<double>(per_epoch));
  }
  return out;
}

std::string AblationReport::csv() const {
  std::string out = "epoch,mode,loss\n";
  for (const auto& arm : arms) {
    for (std::size_t e = 0; e < arm.epoch_loss.size(); ++e) {
      append(out, "%zu,%s,%.17g\n", e, std::string(hyper::mode_name(arm.mode)).c_str(), arm.epoch_loss[e]);
    }
  }
  return out;
}

AblationReport ablation_study(const std::vector<physics::ParameterSample>& data, const training::TrainConfig& cfg,
                              const std::vector<hyper::HyperMode>& modes) {
  if (data.empty()) throw ConfigError("ablation needs at least one sample");
  AblationReport rep;
  for (auto mode : modes) {
    training::TrainConfig c = cfg;
    c.mode = mode;
    c.checkpoint_every = 0;
    auto state = training::init_state(c, static_cast<int>(data.front().values.size()));
    AblationArm arm;
    arm.mode = mode;
    arm.params = state.params.count();
    training::pretrain(state, data, c);
    arm.epoch_loss = epoch_means(state.history, data.size());
    rep.arms.push_back(std::move(arm));
  }
  return rep;
}

}  // namespace lfr::analysis
