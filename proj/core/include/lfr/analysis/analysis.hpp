#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfr/nets/main_net.hpp"
#include "lfr/training/train.hpp"

namespace lfr::analysis {

// -- metrics ---------------------------------------------------------------

/// ||pred - truth||_2 / ||truth||_2 over all entries. Throws DomainError when
/// truth has zero norm and ShapeError on a shape mismatch.
double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Delta_k = |F[truth](k) - F[pred](k)| / |F[truth](k)| for k = 0..N/2.
/// Bins where |F[truth](k)| <= mask_tol * max_k |F[truth](k)| are dropped.
struct FrequencyError {
  std::vector<int> k;
  std::vector<double> delta;
};

FrequencyError frequency_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, double mask_tol = 1e-12);

/// Delta_k at fixed frequencies, one row per recorded step.
class FrequencyErrorTrace {
 public:
  explicit FrequencyErrorTrace(std::vector<int> k_values);

  /// Throws DomainError if the truth spectrum vanishes at a tracked k
  /// (below 1e-12 of its peak magnitude).
  void record(long step, const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

  const std::vector<long>& steps() const { return steps_; }
  const std::vector<int>& k_values() const { return k_; }
  /// steps() x k_values()
  Eigen::MatrixXd delta() const;
  /// Columns step,k,delta.
  std::string csv() const;

 private:
  std::vector<int> k_;
  std::vector<long> steps_;
  std::vector<std::vector<double>> rows_;
};

// -- theorem 1 -------------------------------------------------------------

/// Smallest p whose Hermitian-completed truncation error is <= eps, read off
/// the Parseval tail profile. Every p past floor(N/2) keeps the whole
/// spectrum, so eps = 0 gives at most floor(N/2) + 1.
std::size_t verify_theorem1(const Eigen::VectorXd& w, double eps);

// -- theorem 2 -------------------------------------------------------------

/// Gradients of the loss at two frequencies k1 > k2 with respect to one row
/// of W = Lambda B, and the basis B that maps them to the Lambda row.
struct Theorem2Instance {
  Eigen::MatrixXd lambda;  ///< d x M
  Eigen::MatrixXd b;       ///< M x d
  Eigen::VectorXd g1;      ///< dL(k1)/dw_it, t = 1..d
  Eigen::VectorXd g2;      ///< dL(k2)/dw_it
  double alpha = 0.0;
  double eps = 0.0;
  Eigen::Index tau = 0;

  Eigen::Index d() const { return g1.size(); }
  Eigen::Index m() const { return b.rows(); }
  /// Checks M <= d/4 (unless M = 1), b_{j tau} = 1, and |b_jt| < alpha
  /// elsewhere. Throws ConfigError.
  void validate() const;
};

/// argmax_t |g1_t / g2_t|. Entries with g2_t = 0 are skipped.
Eigen::Index select_tau(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2);

/// min{ |g2_tau| eps / (G1 + G2 r - G2 eps), |g1_tau| / G1 } with
/// r = |g1_tau / g2_tau| and G_i the l1 norm of g_i off tau.
double theorem2_alpha(const Eigen::VectorXd& g1, const Eigen::VectorXd& g2, Eigen::Index tau, double eps);

/// Random instance: gradients ~ N(0,1), b_{j tau} = 1, off-tau entries of
/// B uniform in (-alpha_used, alpha_used) except for two adversarial rows
/// that push every entry to the edge with the signs that shrink the
/// numerator or grow the denominator. alpha_used = inflate * bound.
Theorem2Instance make_theorem2_instance(int d, int m, double eps, double inflate, std::uint64_t seed);

struct Theorem2Result {
  double lhs_ratio = 0.0;      ///< min_j |dL(k1)/dlambda_ij / dL(k2)/dlambda_ij|
  double rhs_max_ratio = 0.0;  ///< max_t |g1_t / g2_t|
  bool holds = false;
  bool skipped = false;        ///< a denominator vanished
  std::string note;
};

/// Evaluates the chain rule dL/dlambda_ij = sum_t b_jt dL/dw_it and checks
/// lhs >= rhs - eps, with a rounding allowance of 1e-12 * max(1, rhs).
Theorem2Result verify_theorem2(const Theorem2Instance& inst);

struct Theorem2Sweep {
  int instances = 0;
  int held = 0;
  int skipped = 0;
  std::vector<std::uint64_t> counterexamples;  ///< seeds of failing instances
  std::string csv;                             ///< seed,alpha,lhs,rhs,holds
};

Theorem2Sweep theorem2_sweep(int instances, int d, int m, double eps, double inflate, std::uint64_t seed);

// -- weight spectra --------------------------------------------------------

/// Full DFT of each layer's flat vector. Columns layer,k,re,im,magnitude.
std::string weight_spectrum_report(const nets::MainNetWeights& weights);

// -- continuity study ------------------------------------------------------

struct ContinuityConfig {
  std::vector<double> x0 = {0.4, 0.5, 2.0};
  nets::MainNetArch arch{2, 50, 5, 1};
  int max_epochs = 3000;
  int check_every = 50;
  double target = 0.02;    ///< relative L2 each run should reach
  double lr = 1e-3;
  int lattice = 100;
  std::uint64_t seed = 0;  ///< shared by every run
  training::TrainConfig train = training::TrainConfig::preset(physics::Benchmark::Burgers);
};

struct ContinuityRun {
  double x0 = 0.0;
  double rel_l2 = 0.0;
  long epochs = 0;
  bool reached_target = false;
  nets::MainNetWeights weights;
};

struct ContinuityReport {
  std::vector<ContinuityRun> runs;
  /// dist[p][l] = ||W_l^(p) - W_l^(p+1)||_1 over weights and bias of layer l.
  std::vector<std::vector<double>> dist;
  int layers_ordered = 0;    ///< layers with dist[0][l] < dist[1][l]
  bool majority = false;
  bool all_reached = false;
  /// Columns layer,pair,l1.
  std::string csv() const;
};

/// Per-layer l1 distance, weights then bias.
std::vector<double> layer_l1(const nets::MainNetWeights& a, const nets::MainNetWeights& b);

/// Burgers initial profile exp(-(x - x0)^2 / 2) evaluated at x.
Eigen::VectorXd gaussian_profile(const Eigen::VectorXd& x, double x0);

/// Trains one standalone physics-informed network per x0 from the same
/// Xavier initialization until its relative L2 against the reference solve
/// drops below the target or the epoch budget runs out.
ContinuityReport continuity_study(const ContinuityConfig& cfg);

// -- ablation --------------------------------------------------------------

struct AblationArm {
  hyper::HyperMode mode = hyper::HyperMode::FourierReduced;
  std::vector<double> epoch_loss;  ///< mean loss per epoch
  Eigen::Index params = 0;
};

/// Pre-trains one model per mode on the same data and seed. CSV columns
/// epoch,mode,loss.
struct AblationReport {
  std::vector<AblationArm> arms;
  std::string csv() const;
};

AblationReport ablation_study(const std::vector<physics::ParameterSample>& data, const training::TrainConfig& cfg,
                              const std::vector<hyper::HyperMode>& modes);

/// Per-epoch mean of the history losses, given the number of samples.
std::vector<double> epoch_means(const std::vector<training::HistoryRow>& history, std::size_t per_epoch);

}  // namespace lfr::analysis
