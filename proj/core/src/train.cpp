#include "lfr/training/train.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "lfr/errors.hpp"
#include "lfr/io/binary.hpp"
#include "lfr/rng.hpp"

namespace lfr::training {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kWeightsMode = 255;

void clip(Eigen::VectorXd& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

void put(io::Writer& w, const std::string& name, const std::vector<std::uint64_t>& dims, const double* data) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(dims.size()));
  std::uint64_t count = 1;
  for (auto d : dims) {
    w.u64(d);
    count *= d;
  }
  w.f64s(data, count);
}

void put_vec(io::Writer& w, const std::string& name, const Eigen::VectorXd& v) {
  put(w, name, {static_cast<std::uint64_t>(v.size())}, v.data());
}

void put_list(io::Writer& w, const std::string& name, const std::vector<double>& v) {
  put(w, name, {static_cast<std::uint64_t>(v.size())}, v.data());
}

std::map<std::string, Tensor> read_tensors(io::Reader& r, std::uint32_t count) {
  std::map<std::string, Tensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw IoError("tensor '" + name + "' has implausible rank");
    Tensor t;
    std::uint64_t total = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u64());
      total *= t.dims.back();
    }
    if (total > (1ULL << 32)) throw IoError("tensor '" + name + "' is implausibly large");
    t.data.resize(total);
    r.f64s(t.data.data(), total);
    out[name] = std::move(t);
  }
  if (!r.done()) throw IoError("trailing bytes after tensors");
  return out;
}

const Tensor& need(const std::map<std::string, Tensor>& m, const std::string& name) {
  const auto it = m.find(name);
  if (it == m.end()) throw IoError("checkpoint lacks tensor '" + name + "'");
  return it->second;
}

Eigen::VectorXd as_vec(const Tensor& t) { return Eigen::Map<const Eigen::VectorXd>(t.data.data(), t.data.size()); }

std::vector<nets::LayerVars> main_on_tape(ad::Tape& tape, const nets::MainNetWeights& w) {
  return nets::weights_on_tape(tape, w, true);
}

Eigen::VectorXd main_gradient(const ad::Tape& tape, const std::vector<nets::LayerVars>& vars) {
  Eigen::Index total = 0;
  for (const auto& lv : vars) total += lv.w.value().size() + (lv.b ? lv.b->value().size() : 0);
  Eigen::VectorXd g(total);
  Eigen::Index k = 0;
  for (const auto& lv : vars) {
    const ad::Matrix gw = tape.grad(lv.w);
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) g[k++] = gw(r, c);
    }
    if (lv.b) {
      const ad::Matrix gb = tape.grad(*lv.b);
      g.segment(k, gb.size()) = gb.col(0);
      k += gb.size();
    }
  }
  return g;
}

physics::CollocationBatch draw_batch(const TrainConfig& cfg, const physics::ParameterSample& eta, Rng& rng) {
  auto batch = physics::sample_collocation(cfg.problem(), eta, cfg.counts, rng);
  batch.lambda_bc = cfg.lambda_bc;
  batch.lambda_ic = cfg.lambda_ic;
  return batch;
}

std::string diverged_message(long epoch, long step, double loss) {
  std::ostringstream os;
  os << "training diverged at epoch " << epoch << ", step " << step << " (loss " << loss << ")";
  return os.str();
}

}  // namespace

void adam_step(Eigen::VectorXd& params, AdamState& state, const Eigen::VectorXd& gradient, double lr,
               const AdamConfig& cfg) {
  if (gradient.size() != params.size()) throw ShapeError("Adam: gradient length differs from parameters");
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("Adam: moment vectors do not match parameters");
  }
  if (!gradient.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < gradient.size() && std::isfinite(gradient[bad]); ++bad) {
    }
    throw NumericalError("Adam: non-finite gradient entry " + std::to_string(bad));
  }
  state.step += 1;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * gradient;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

void LrSchedule::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay factor must lie in (0, 1]");
  if (interval < 1) throw ConfigError("decay interval must be >= 1");
  if (horizon < 0) throw ConfigError("decay horizon must be >= 0");
}

double lr_schedule(long step, long epoch, const LrSchedule& s) {
  if (step < 0 || epoch < 0) throw ConfigError("schedule position must be >= 0");
  long u = s.unit == ScheduleUnit::Steps ? step : epoch;
  if (s.horizon > 0) u = std::min(u, s.horizon);
  return s.lr0 * std::pow(s.decay, static_cast<double>(u / s.interval));
}

TrainConfig TrainConfig::preset(physics::Benchmark kind) {
  TrainConfig c;
  c.benchmark = kind;
  c.epochs_finetune = 300;
  c.lr_finetune = 1e-4;
  switch (kind) {
    case physics::Benchmark::Antiderivative:
      c.arch = {1, 64, 4, 1};
      c.codec = {32, 2048, 16};
      c.schedule = {5e-4, 0.8, 100, ScheduleUnit::Steps, 0};
      c.epochs_pretrain = 500;
      break;
    case physics::Benchmark::Advection:
      c.arch = {2, 128, 4, 1};
      c.codec = {32, 2048, 16};
      c.schedule = {5e-4, 0.8, 50, ScheduleUnit::Epochs, 300};
      c.epochs_pretrain = 1000;
      break;
    case physics::Benchmark::Burgers:
      c.arch = {2, 128, 4, 1};
      c.codec = {64, 2048, 32};
      c.schedule = {5e-4, 0.7, 50, ScheduleUnit::Epochs, 300};
      c.epochs_pretrain = 500;
      break;
    case physics::Benchmark::Diffusion:
      c.arch = {2, 128, 4, 1};
      c.codec = {64, 2048, 32};
      c.schedule = {1e-3, 0.5, 50, ScheduleUnit::Epochs, 300};
      c.epochs_pretrain = 1000;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  validate_main();
  (void)codec.per_layer(arch.layers());
}

void TrainConfig::validate_main() const {
  schedule.validate();
  arch.validate();
  if (arch.in_dim != problem().in_dim()) {
    throw ConfigError("main network input dimension must be " + std::to_string(problem().in_dim()) + " for " +
                      std::string(physics::benchmark_name(benchmark)));
  }
  if (arch.out_dim != 1) throw ConfigError("main network output dimension must be 1");
  if (epochs_pretrain < 0 || epochs_finetune < 0) throw ConfigError("epoch counts must be >= 0");
  if (!(lr_finetune > 0.0)) throw ConfigError("fine-tuning learning rate must be > 0");
  if (lambda_bc < 0.0 || lambda_ic < 0.0) throw ConfigError("loss weights must be nonnegative");
  if (counts.residual < 1 || counts.bc < 1 || counts.ic < 1) throw ConfigError("collocation counts must be >= 1");
  if (!(divergence > 0.0)) throw ConfigError("divergence threshold must be > 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "step,lr,loss,loss_r,loss_bc,loss_ic\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.lr, r.loss.total,
                  r.loss.residual, r.loss.bc, r.loss.ic);
    out += line;
  }
  return out;
}

TrainState init_state(const TrainConfig& cfg, int m) {
  cfg.validate();
  TrainState s;
  s.params = hyper::HyperNetParams::init(cfg.mode, cfg.arch, cfg.codec, cfg.hyper, m,
                                         SeedSplitter(cfg.seed).derive("init"));
  s.theta = s.params.flatten();
  s.adam = AdamState::zeros(s.theta.size());
  return s;
}

physics::LossTerms evaluate_loss(const hyper::HyperNetParams& params, const physics::ParameterSample& eta,
                                 const TrainConfig& cfg, std::uint64_t collocation_seed) {
  Rng rng(collocation_seed);
  const auto batch = draw_batch(cfg, eta, rng);
  ad::Tape tape;
  const auto vars = hyper::params_on_tape(tape, params, false);
  const auto layers = hyper::generate_weights(tape, params, vars, eta.values);
  return physics::physics_loss(tape, cfg.problem(), layers, eta, batch, cfg.activation).terms;
}

void pretrain(TrainState& state, const std::vector<physics::ParameterSample>& data, const TrainConfig& cfg,
              const StepCallback& on_step) {
  cfg.validate();
  if (data.empty()) throw ConfigError("pre-training needs at least one parameter sample");
  state.params.validate();
  if (state.theta.size() != state.params.count()) throw ShapeError("state parameters are out of sync");
  for (const auto& eta : data) {
    if (eta.values.size() != state.params.m) throw ShapeError("sample length differs from hypernetwork input");
  }
  const SeedSplitter split(cfg.seed);
  const physics::PdeProblem problem = cfg.problem();

  while (state.epoch < cfg.epochs_pretrain) {
    const TrainState epoch_start = state;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Rng rng = split.stream("collocation", static_cast<std::uint64_t>(state.epoch), i);
      const auto batch = draw_batch(cfg, data[i], rng);
      const double lr = lr_schedule(state.step, state.epoch, cfg.schedule);
      physics::LossTerms terms;
      Eigen::VectorXd g;
      try {
        ad::Tape tape;
        const auto vars = hyper::params_on_tape(tape, state.params, true);
        const auto layers = hyper::generate_weights(tape, state.params, vars, data[i].values);
        const auto loss = physics::physics_loss(tape, problem, layers, data[i], batch, cfg.activation);
        terms = loss.terms;
        if (!(terms.total <= cfg.divergence)) throw NumericalError(diverged_message(state.epoch, state.step, terms.total));
        tape.backward(loss.total);
        g = vars.gradient(tape);
        clip(g, cfg.clip_norm);
        adam_step(state.theta, state.adam, g, lr);
      } catch (const NumericalError& e) {
        std::string msg = e.what();
        if (!cfg.checkpoint_path.empty()) {
          save_checkpoint(cfg.checkpoint_path, epoch_start);
          msg += "; last good state (epoch " + std::to_string(epoch_start.epoch) + ") saved to " +
                 cfg.checkpoint_path.string();
        }
        throw NumericalError(msg);
      }
      state.params.assign(state.theta);
      state.history.push_back({state.step, lr, terms});
      ++state.step;
      if (on_step) on_step(state);
    }
    ++state.epoch;
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() && state.epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(cfg.checkpoint_path, state);
    }
  }
}

Eigen::VectorXd flatten_weights(const nets::MainNetWeights& w) {
  Eigen::Index total = 0;
  for (const auto& l : w.layers) total += l.shape().n_weights();
  Eigen::VectorXd flat(total);
  Eigen::Index k = 0;
  for (const auto& l : w.layers) {
    const Eigen::VectorXd f = l.flatten();
    flat.segment(k, f.size()) = f;
    k += f.size();
  }
  return flat;
}

nets::MainNetWeights unflatten_weights(const std::vector<nets::LayerShape>& shapes, const Eigen::VectorXd& flat) {
  nets::MainNetWeights w;
  Eigen::Index k = 0;
  for (const auto& s : shapes) {
    if (k + s.n_weights() > flat.size()) throw ShapeError("flat weight vector is too short");
    w.layers.push_back(nets::LayerWeights::unflatten(s, flat.segment(k, s.n_weights())));
    k += s.n_weights();
  }
  if (k != flat.size()) throw ShapeError("flat weight vector is too long");
  return w;
}

nets::MainNetWeights xavier_init(const nets::MainNetArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  nets::MainNetWeights w;
  for (const auto& s : arch.layers()) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(s.in + s.out)));
    nets::LayerWeights lw;
    lw.w.resize(s.out, s.in);
    for (Eigen::Index r = 0; r < s.out; ++r) {
      for (Eigen::Index c = 0; c < s.in; ++c) lw.w(r, c) = dist(rng);
    }
    if (s.bias) lw.b = Eigen::VectorXd::Zero(s.out);
    w.layers.push_back(std::move(lw));
  }
  return w;
}

FinetuneResult train_main_net(const physics::ParameterSample& eta, const nets::MainNetWeights& init,
                              const TrainConfig& cfg, int epochs, double lr,
                              const std::function<bool(const nets::MainNetWeights&, long)>& stop) {
  cfg.validate_main();
  init.validate();
  if (epochs < 0) throw ConfigError("epoch count must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  const auto shapes = init.shapes();
  const SeedSplitter split(cfg.seed);
  const physics::PdeProblem problem = cfg.problem();

  FinetuneResult out;
  out.initial = init;
  out.weights = init;
  Eigen::VectorXd flat = flatten_weights(init);
  AdamState adam = AdamState::zeros(flat.size());
  for (long e = 0; e < epochs; ++e) {
    if (stop && stop(out.weights, e)) break;
    Rng rng = split.stream("finetune", static_cast<std::uint64_t>(e));
    const auto batch = draw_batch(cfg, eta, rng);
    ad::Tape tape;
    const auto vars = main_on_tape(tape, out.weights);
    const auto loss = physics::physics_loss(tape, problem, vars, eta, batch, cfg.activation);
    if (!(loss.terms.total <= cfg.divergence)) throw NumericalError(diverged_message(e, e, loss.terms.total));
    tape.backward(loss.total);
    Eigen::VectorXd g = main_gradient(tape, vars);
    clip(g, cfg.clip_norm);
    adam_step(flat, adam, g, lr);
    out.weights = unflatten_weights(shapes, flat);
    out.history.push_back({e, lr, loss.terms});
  }
  return out;
}

FinetuneResult finetune(const physics::ParameterSample& eta, const hyper::HyperNetParams& theta,
                        const TrainConfig& cfg, int epochs) {
  return train_main_net(eta, hyper::reconstruct_weights(theta, eta.values), cfg, epochs, cfg.lr_finetune);
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  const auto& p = state.params;
  io::Writer w;
  w.tag("LFRP");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(p.mode));
  w.u32(6);
  put_list(w, "meta",
           {static_cast<double>(p.main.in_dim), static_cast<double>(p.main.width),
            static_cast<double>(p.main.hidden_layers), static_cast<double>(p.main.out_dim),
            static_cast<double>(p.arch.width), static_cast<double>(p.arch.hidden_layers),
            static_cast<double>(p.arch.act), p.arch.init_std, static_cast<double>(p.arch.gain),
            static_cast<double>(p.m), static_cast<double>(p.codec.p_input), static_cast<double>(p.codec.p_hidden),
            static_cast<double>(p.codec.p_output)});
  put_vec(w, "theta", state.theta);
  put_vec(w, "adam.m", state.adam.m);
  put_vec(w, "adam.v", state.adam.v);
  put_list(w, "counters",
           {static_cast<double>(state.epoch), static_cast<double>(state.step), static_cast<double>(state.adam.step)});
  std::vector<double> hist;
  for (const auto& r : state.history) {
    hist.insert(hist.end(), {static_cast<double>(r.step), r.lr, r.loss.total, r.loss.residual, r.loss.bc, r.loss.ic});
  }
  put(w, "history", {static_cast<std::uint64_t>(state.history.size()), 6}, hist.data());
  io::write_file_atomic(path, w.data());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path));
  r.expect_tag("LFRP");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t mode = r.u32();
  if (mode == kWeightsMode) throw IoError("'" + path.string() + "' holds main-network weights, not a training state");
  if (mode > 2) throw IoError("unknown hypernetwork mode in checkpoint");
  const auto tensors = read_tensors(r, r.u32());

  const auto& meta = need(tensors, "meta").data;
  if (meta.size() != 13) throw IoError("checkpoint meta has the wrong length");
  nets::MainNetArch arch{static_cast<int>(meta[0]), static_cast<int>(meta[1]), static_cast<int>(meta[2]),
                         static_cast<int>(meta[3])};
  hyper::HyperArch ha;
  ha.width = static_cast<int>(meta[4]);
  ha.hidden_layers = static_cast<int>(meta[5]);
  ha.act = static_cast<nets::Activation>(static_cast<int>(meta[6]));
  ha.init_std = meta[7];
  ha.gain = static_cast<hyper::CoefficientGain>(static_cast<int>(meta[8]));
  const int m = static_cast<int>(meta[9]);
  hyper::SpectralCodecConfig codec{static_cast<std::size_t>(meta[10]), static_cast<std::size_t>(meta[11]),
                                   static_cast<std::size_t>(meta[12])};

  TrainState s;
  try {
    s.params = hyper::HyperNetParams::init(static_cast<hyper::HyperMode>(mode), arch, codec, ha, m, 0);
  } catch (const Error& e) {
    throw IoError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
  s.theta = as_vec(need(tensors, "theta"));
  if (s.theta.size() != s.params.count()) throw IoError("checkpoint parameter count does not match its architecture");
  s.params.assign(s.theta);
  s.adam.m = as_vec(need(tensors, "adam.m"));
  s.adam.v = as_vec(need(tensors, "adam.v"));
  if (s.adam.m.size() != s.theta.size() || s.adam.v.size() != s.theta.size()) {
    throw IoError("checkpoint optimizer moments have the wrong length");
  }
  const auto& counters = need(tensors, "counters").data;
  if (counters.size() != 3) throw IoError("checkpoint counters have the wrong length");
  s.epoch = static_cast<long>(counters[0]);
  s.step = static_cast<long>(counters[1]);
  s.adam.step = static_cast<long>(counters[2]);
  const auto& hist = need(tensors, "history");
  if (hist.dims.size() != 2 || hist.dims[1] != 6) throw IoError("checkpoint history has the wrong shape");
  for (std::uint64_t i = 0; i < hist.dims[0]; ++i) {
    const double* row = hist.data.data() + 6 * i;
    s.history.push_back({static_cast<long>(row[0]), row[1], {row[2], row[3], row[4], row[5]}});
  }
  return s;
}

void save_weights(const std::filesystem::path& path, const nets::MainNetWeights& w, nets::Activation act) {
  w.validate();
  io::Writer out;
  out.tag("LFRP");
  out.u32(kCheckpointVersion);
  out.u32(kWeightsMode);
  std::uint32_t count = 1;
  for (const auto& l : w.layers) count += l.has_bias() ? 2 : 1;
  out.u32(count);
  put_list(out, "meta", {static_cast<double>(w.layers.size()), static_cast<double>(act)});
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const auto& l = w.layers[i];
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = l.w;
    put(out, "layer" + std::to_string(i) + ".w",
        {static_cast<std::uint64_t>(l.w.rows()), static_cast<std::uint64_t>(l.w.cols())}, rm.data());
    if (l.has_bias()) put_vec(out, "layer" + std::to_string(i) + ".b", l.b);
  }
  io::write_file_atomic(path, out.data());
}

nets::MainNetWeights load_weights(const std::filesystem::path& path, nets::Activation* act) {
  io::Reader r(io::read_file(path));
  r.expect_tag("LFRP");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  if (r.u32() != kWeightsMode) throw IoError("'" + path.string() + "' is a training checkpoint, not weights");
  const auto tensors = read_tensors(r, r.u32());
  const auto& meta = need(tensors, "meta").data;
  if (meta.size() != 2) throw IoError("weights meta has the wrong length");
  if (act) *act = static_cast<nets::Activation>(static_cast<int>(meta[1]));
  nets::MainNetWeights w;
  for (int i = 0; i < static_cast<int>(meta[0]); ++i) {
    const auto& tw = need(tensors, "layer" + std::to_string(i) + ".w");
    if (tw.dims.size() != 2) throw IoError("layer weights must be rank 2");
    nets::LayerWeights lw;
    lw.w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        tw.data.data(), static_cast<Eigen::Index>(tw.dims[0]), static_cast<Eigen::Index>(tw.dims[1]));
    const auto it = tensors.find("layer" + std::to_string(i) + ".b");
    if (it != tensors.end()) lw.b = as_vec(it->second);
    w.layers.push_back(std::move(lw));
  }
  try {
    w.validate();
  } catch (const ShapeError& e) {
    throw IoError(std::string("stored weights are inconsistent: ") + e.what());
  }
  return w;
}

}  // namespace lfr::training
