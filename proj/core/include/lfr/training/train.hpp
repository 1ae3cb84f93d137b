#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "lfr/hypernet/hypernet.hpp"
#include "lfr/nets/main_net.hpp"
#include "lfr/physics/pde.hpp"

namespace lfr::training {

// -- optimizer -------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

/// One bias-corrected Adam update of `params` in place. Throws
/// NumericalError on a non-finite gradient and ShapeError on a length
/// mismatch.
void adam_step(Eigen::VectorXd& params, AdamState& state, const Eigen::VectorXd& gradient, double lr,
               const AdamConfig& cfg = {});

// -- learning rate ---------------------------------------------------------

enum class ScheduleUnit { Steps, Epochs };

/// lr0 * decay^floor(u / interval) where u counts steps or epochs. With a
/// nonzero horizon, u stops advancing at the horizon, so no decay is applied
/// past it.
struct LrSchedule {
  double lr0 = 5e-4;
  double decay = 0.8;
  long interval = 100;
  ScheduleUnit unit = ScheduleUnit::Steps;
  long horizon = 0;

  void validate() const;
};

double lr_schedule(long step, long epoch, const LrSchedule& s);

// -- configuration ---------------------------------------------------------

struct TrainConfig {
  physics::Benchmark benchmark = physics::Benchmark::Antiderivative;
  physics::PdeConstants constants;
  int epochs_pretrain = 500;
  int epochs_finetune = 300;
  LrSchedule schedule;
  double lr_finetune = 1e-4;
  physics::CollocationCounts counts;
  double lambda_bc = 1.0;
  double lambda_ic = 1.0;
  std::uint64_t seed = 0;
  hyper::HyperMode mode = hyper::HyperMode::FourierReduced;
  nets::Activation activation = nets::Activation::GELU;
  nets::MainNetArch arch;
  hyper::HyperArch hyper;
  hyper::SpectralCodecConfig codec;
  double clip_norm = 10.0;    ///< global gradient norm cap; <= 0 disables
  double divergence = 1e6;    ///< loss above this aborts the run
  int checkpoint_every = 0;   ///< epochs; 0 disables periodic checkpoints
  std::filesystem::path checkpoint_path;

  /// Per-benchmark settings from the reference configuration: widths,
  /// truncations, learning rates, decay rules, and epoch counts.
  static TrainConfig preset(physics::Benchmark kind);
  physics::PdeProblem problem() const { return {benchmark, constants}; }
  void validate() const;
  /// Everything except the codec, for runs without a hypernetwork.
  void validate_main() const;
};

// -- history ---------------------------------------------------------------

struct HistoryRow {
  long step = 0;
  double lr = 0.0;
  physics::LossTerms loss;
};

/// CSV with header step,lr,loss,loss_r,loss_bc,loss_ic; values printed with
/// 17 significant digits so reruns compare byte for byte.
std::string history_csv(const std::vector<HistoryRow>& rows);

// -- pre-training ----------------------------------------------------------

struct TrainState {
  hyper::HyperNetParams params;
  Eigen::VectorXd theta;  ///< params.flatten(), kept in sync
  AdamState adam;
  long epoch = 0;         ///< completed epochs
  long step = 0;          ///< completed optimizer steps
  std::vector<HistoryRow> history;
};

TrainState init_state(const TrainConfig& cfg, int m);

/// Called after every optimizer step with the updated state.
using StepCallback = std::function<void(const TrainState&)>;

/// Runs epochs until state.epoch == cfg.epochs_pretrain. Each epoch visits
/// the samples in order with one Adam step each; collocation points are
/// drawn from a stream keyed by (epoch, sample), so a resumed run repeats
/// an uninterrupted one exactly. Writes cfg.checkpoint_path every
/// cfg.checkpoint_every epochs. On divergence the state from the start of
/// the failing epoch is saved (when a path is set) and NumericalError is
/// thrown.
void pretrain(TrainState& state, const std::vector<physics::ParameterSample>& data, const TrainConfig& cfg,
              const StepCallback& on_step = {});

/// Loss of one sample for the given parameters and collocation seed stream.
physics::LossTerms evaluate_loss(const hyper::HyperNetParams& params, const physics::ParameterSample& eta,
                                 const TrainConfig& cfg, std::uint64_t collocation_seed);

// -- fine-tuning -----------------------------------------------------------

struct FinetuneResult {
  nets::MainNetWeights initial;  ///< zero-shot reconstruction
  nets::MainNetWeights weights;
  std::vector<HistoryRow> history;
};

/// Full fine-tuning: the main-network weights reconstructed from eta become
/// the optimization variables, trained at constant cfg.lr_finetune with one
/// step per epoch.
FinetuneResult finetune(const physics::ParameterSample& eta, const hyper::HyperNetParams& theta,
                        const TrainConfig& cfg, int epochs);

/// Physics-informed training of a standalone main network (no hypernetwork),
/// starting from `init`. Returns the trained weights and history.
FinetuneResult train_main_net(const physics::ParameterSample& eta, const nets::MainNetWeights& init,
                              const TrainConfig& cfg, int epochs, double lr,
                              const std::function<bool(const nets::MainNetWeights&, long)>& stop = {});

/// Flattened main-network weights in layer order (weights row-major, bias).
Eigen::VectorXd flatten_weights(const nets::MainNetWeights& w);
nets::MainNetWeights unflatten_weights(const std::vector<nets::LayerShape>& shapes, const Eigen::VectorXd& flat);

/// Xavier-normal weights with zero biases.
nets::MainNetWeights xavier_init(const nets::MainNetArch& arch, std::uint64_t seed);

// -- persistence -----------------------------------------------------------

/// "LFRP" checkpoint with the architecture, parameters, optimizer moments,
/// counters, and history. Layout in docs/formats.md.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

/// Same container holding main-network weights (mode field 255).
void save_weights(const std::filesystem::path& path, const nets::MainNetWeights& w, nets::Activation act);
nets::MainNetWeights load_weights(const std::filesystem::path& path, nets::Activation* act = nullptr);

}  // namespace lfr::training
