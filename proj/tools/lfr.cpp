// lfr: data generation, pre-training, fine-tuning, evaluation and analysis.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfr/analysis/analysis.hpp"
#include "lfr/errors.hpp"
#include "lfr/io/binary.hpp"
#include "lfr/problems/dataset.hpp"
#include "lfr/training/train.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string benchmark;
  std::string mode;
  std::optional<int> epochs;
  bool quiet = false;

  long n = -1;
  std::string resume;
  std::string checkpoint;
  std::string weights;
  std::string dataset;
  std::string split = "test";
  std::optional<long> index;
  std::string kind;
  std::string run_id;
  std::vector<double> eps;
  int instances = 1000;
  int d = 64;
  int m = 8;
  double inflate = 1.0;
  std::optional<int> every;
  std::vector<int> k;
  std::optional<double> lr;
  std::optional<int> max_epochs;
  std::vector<double> x0;
  std::vector<std::string> modes;
};

// -- plumbing ------------------------------------------------------------------

int thread_count() {
  const char* env = std::getenv("LFR_THREADS");
  if (env == nullptr || *env == '\0') return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("LFR_THREADS must be a positive integer");
  return static_cast<int>(v);
}

/// Run metadata that legitimately differs between reruns. Kept in its own
/// field so the rest of a manifest compares byte for byte.
json run_block(std::chrono::steady_clock::time_point started) {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {{"finished_utc", stamp}, {"elapsed_s", secs}, {"threads", thread_count()}};
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) make_dir(path.parent_path());
  io::write_file_atomic(path, text);
}

void write_json(const fs::path& path, const json& j) { write_text(path, cli::dump(j)); }

void note(const Options& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << '\n';
}

cli::RunConfig load_config(const Options& o) {
  cli::RunConfig c;
  if (!o.config.empty()) {
    c = cli::RunConfig::load(o.config);
  } else {
    c = cli::RunConfig::defaults(physics::parse_benchmark(o.benchmark.empty() ? "antiderivative" : o.benchmark));
  }
  if (!o.benchmark.empty() && physics::parse_benchmark(o.benchmark) != c.train.benchmark) {
    throw ConfigError("--benchmark disagrees with the config file");
  }
  if (o.seed) c.train.seed = *o.seed;
  if (!o.mode.empty()) c.train.mode = hyper::parse_mode(o.mode);
  if (o.epochs) {
    if (*o.epochs < 0) throw ConfigError("--epochs must be >= 0");
    c.train.epochs_pretrain = *o.epochs;
    c.train.epochs_finetune = *o.epochs;
  }
  c.validate();
  return c;
}

problems::Dataset load_dataset(const cli::RunConfig& c, const Options& o) {
  const fs::path path = o.dataset.empty() ? c.dataset(o.split) : fs::path(o.dataset);
  auto d = problems::read_dataset(path);
  if (d.kind != c.train.benchmark) {
    throw ConfigError(path.string() + " holds " + std::string(physics::benchmark_name(d.kind)) + " data, config is " +
                      std::string(physics::benchmark_name(c.train.benchmark)));
  }
  return d;
}

std::size_t sample_index(const problems::Dataset& d, const Options& o) {
  const long i = o.index.value_or(0);
  if (i < 0 || static_cast<std::size_t>(i) >= d.size()) {
    throw ConfigError("--index " + std::to_string(i) + " out of range for " + std::to_string(d.size()) + " samples");
  }
  return static_cast<std::size_t>(i);
}

void check_checkpoint(const training::TrainState& st, const cli::RunConfig& c, const problems::Dataset* d) {
  const auto& p = st.params;
  if (!(p.main == c.train.arch) || !(p.codec == c.train.codec) || !(p.arch == c.train.hyper) ||
      p.mode != c.train.mode) {
    throw ConfigError("checkpoint architecture does not match the config");
  }
  if (d != nullptr && p.m != d->sensors.size()) {
    throw ConfigError("checkpoint expects " + std::to_string(p.m) + " sensors, dataset has " +
                      std::to_string(d->sensors.size()));
  }
}

double field_error(const nets::MainNetWeights& w, nets::Activation act, const problems::Dataset& d, std::size_t i) {
  const Eigen::MatrixXd pred = nets::main_net_forward_batch(d.lattice_points(), w, act);
  return analysis::relative_l2(pred.transpose(), d.flat_field(i));
}

fs::path report_path(const Options& o, const std::string& name) {
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  return dir / (o.run_id.empty() ? name : o.run_id + "." + name);
}

json count_json(const hyper::ParamCount& pc) {
  return {{"hyper_params", pc.hyper_params},
          {"main_weights", pc.main_weights},
          {"full_spectrum_params", pc.full_spectrum_params},
          {"single_hyper_params", pc.single_hyper_params},
          {"complex_full_params", pc.complex_full_params},
          {"ratio_to_full_spectrum", pc.ratio},
          {"ratio_to_complex_full", double(pc.hyper_params) / double(pc.complex_full_params)}};
}

// -- commands --------------------------------------------------------------------

int cmd_generate(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  if (o.n < 1) throw ConfigError("--n must be >= 1");
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.config.empty() && o.benchmark.empty()) throw ConfigError("--benchmark or --config is required");
  const auto c = load_config(o);
  const std::uint64_t seed = c.train.seed;
  const int threads = thread_count();

  std::vector<problems::SampleRecord> rec;
  const auto data = problems::generate_dataset(c.data, static_cast<std::size_t>(o.n), seed, threads, &rec);
  const fs::path out(o.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  problems::write_dataset(data, out);

  json samples = json::array();
  for (std::size_t i = 0; i < rec.size(); ++i) {
    samples.push_back({{"index", i}, {"seed", rec[i].seed}, {"solver_steps", rec[i].solver_steps},
                       {"jitter", rec[i].jitter}});
  }
  const json manifest = {
      {"schema_version", cli::kSchemaVersion},
      {"command", "generate"},
      {"benchmark", physics::benchmark_name(c.data.kind)},
      {"seed", seed},
      {"n", o.n},
      {"data",
       {{"m", c.data.m}, {"nx", c.data.nx}, {"nt", data.nt}, {"length_scale", c.data.grf.length_scale},
        {"periodic", data.sensors.periodic}}},
      {"constants", {{"nu", c.train.constants.nu}, {"d", c.train.constants.d}, {"k", c.train.constants.k}}},
      {"samples", samples},
      {"run", run_block(started)}};
  write_json(out.string() + ".manifest.json", manifest);
  note(o, "wrote " + std::to_string(data.size()) + " samples to " + out.string());
  return 0;
}

int cmd_pretrain(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  auto c = load_config(o);
  if (!o.out.empty()) c.out_dir = o.out;
  Options train_split = o;
  train_split.split = "train";
  const auto data = load_dataset(c, train_split);
  if (data.sensors.size() != c.data.m) throw ConfigError("dataset sensor count differs from data.m");

  std::vector<physics::ParameterSample> samples;
  for (std::size_t i = 0; i < data.size(); ++i) samples.push_back(data.sample(i));
  if (samples.empty()) throw ConfigError("training dataset is empty");

  make_dir(c.out_dir);
  const fs::path ckpt = c.out_dir / "checkpoint.lfrp";
  training::TrainState st;
  if (!o.resume.empty()) {
    if (fs::weakly_canonical(o.resume) == fs::weakly_canonical(ckpt)) {
      throw ConfigError("--resume must not point at the output checkpoint");
    }
    st = training::load_checkpoint(o.resume);
    check_checkpoint(st, c, &data);
  } else {
    st = training::init_state(c.train, data.sensors.size());
  }
  c.train.checkpoint_path = ckpt;

  const std::size_t per_epoch = samples.size();
  const auto on_step = [&](const training::TrainState& s) {
    if (o.quiet || s.step % static_cast<long>(per_epoch) != 0) return;
    double mean = 0.0;
    for (std::size_t i = s.history.size() - per_epoch; i < s.history.size(); ++i) mean += s.history[i].loss.total;
    char line[128];
    std::snprintf(line, sizeof line, "epoch %ld/%d  loss %.6e  lr %.3e", s.epoch + 1, c.train.epochs_pretrain,
                  mean / double(per_epoch), s.history.back().lr);
    std::cerr << line << '\n';
  };
  training::pretrain(st, samples, c.train, on_step);

  training::save_checkpoint(ckpt, st);
  write_text(c.out_dir / "history.csv", training::history_csv(st.history));
  const auto pc = hyper::parameter_count(c.train.arch, c.train.codec, c.train.hyper, data.sensors.size(), c.train.mode);
  if (c.reports.params) write_json(c.out_dir / "params.json", count_json(pc));
  if (c.reports.spectrum) {
    write_text(c.out_dir / "spectrum.csv",
               analysis::weight_spectrum_report(hyper::reconstruct_weights(st.params, samples[0].values)));
  }
  json manifest = {{"schema_version", cli::kSchemaVersion},
                   {"command", "pretrain"},
                   {"config", c.to_json()},
                   {"samples", data.size()},
                   {"epochs", st.epoch},
                   {"steps", st.step},
                   {"hyper_params", pc.hyper_params},
                   {"final_loss", st.history.empty() ? 0.0 : st.history.back().loss.total},
                   {"resumed_from", o.resume},
                   {"run", run_block(started)}};
  write_json(c.out_dir / "manifest.json", manifest);
  note(o, "checkpoint written to " + ckpt.string());
  return 0;
}

int cmd_finetune(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  auto c = load_config(o);
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const auto data = load_dataset(c, o);
  const auto st = training::load_checkpoint(o.checkpoint);
  check_checkpoint(st, c, &data);
  const std::size_t i = sample_index(data, o);

  const auto r = training::finetune(data.sample(i), st.params, c.train, c.train.epochs_finetune);
  const double zero_shot = field_error(r.initial, c.train.activation, data, i);
  const double tuned = field_error(r.weights, c.train.activation, data, i);

  make_dir(c.out_dir);
  const std::string tag = std::to_string(i);
  training::save_weights(c.out_dir / ("weights_" + tag + ".lfrp"), r.weights, c.train.activation);
  write_text(c.out_dir / ("finetune_" + tag + ".csv"), training::history_csv(r.history));
  write_json(c.out_dir / ("finetune_" + tag + ".json"), {{"schema_version", cli::kSchemaVersion},
                                                          {"command", "finetune"},
                                                          {"split", o.dataset.empty() ? o.split : o.dataset},
                                                          {"index", i},
                                                          {"epochs", c.train.epochs_finetune},
                                                          {"lr", c.train.lr_finetune},
                                                          {"zero_shot_rel_l2", zero_shot},
                                                          {"finetuned_rel_l2", tuned},
                                                          {"run", run_block(started)}});
  char line[128];
  std::snprintf(line, sizeof line, "sample %zu: zero-shot %.4e, fine-tuned %.4e", i, zero_shot, tuned);
  note(o, line);
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.checkpoint.empty() == o.weights.empty()) throw ConfigError("give exactly one of --checkpoint or --weights");
  const auto c = load_config(o);
  const auto data = load_dataset(c, o);

  std::optional<training::TrainState> st;
  std::optional<nets::MainNetWeights> fixed;
  nets::Activation act = c.train.activation;
  if (!o.checkpoint.empty()) {
    st = training::load_checkpoint(o.checkpoint);
    check_checkpoint(*st, c, &data);
  } else {
    fixed = training::load_weights(o.weights, &act);
  }

  std::vector<std::size_t> which;
  if (o.index) {
    which.push_back(sample_index(data, o));
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) which.push_back(i);
  }
  json per = json::array();
  double sum = 0.0;
  for (std::size_t i : which) {
    const auto w = st ? hyper::reconstruct_weights(st->params, data.eta[i]) : *fixed;
    const double e = field_error(w, act, data, i);
    per.push_back({{"index", i}, {"rel_l2", e}});
    sum += e;
  }
  const json metrics = {{"schema_version", cli::kSchemaVersion},
                        {"command", "evaluate"},
                        {"source", st ? o.checkpoint : o.weights},
                        {"dataset", o.dataset.empty() ? c.dataset(o.split).string() : o.dataset},
                        {"per_sample", per},
                        {"mean_rel_l2", which.empty() ? 0.0 : sum / double(which.size())}};
  if (o.out.empty()) {
    std::cout << cli::dump(metrics);
  } else {
    write_json(o.out, metrics);
  }
  char line[96];
  std::snprintf(line, sizeof line, "mean relative L2 over %zu samples: %.6e", which.size(),
                which.empty() ? 0.0 : sum / double(which.size()));
  note(o, line);
  return 0;
}

// -- analyze --------------------------------------------------------------------

nets::MainNetWeights weights_for_analysis(const Options& o, const cli::RunConfig& c) {
  if (!o.weights.empty()) return training::load_weights(o.weights);
  if (o.checkpoint.empty()) throw ConfigError("give --weights, or --checkpoint with a dataset sample");
  const auto st = training::load_checkpoint(o.checkpoint);
  const auto data = load_dataset(c, o);
  check_checkpoint(st, c, &data);
  return hyper::reconstruct_weights(st.params, data.eta[sample_index(data, o)]);
}

int analyze_spectrum(const Options& o) {
  const auto c = load_config(o);
  write_text(report_path(o, "spectrum.csv"), analysis::weight_spectrum_report(weights_for_analysis(o, c)));
  return 0;
}

int analyze_theorem1(const Options& o) {
  const auto c = load_config(o);
  const auto w = weights_for_analysis(o, c);
  const std::vector<double> eps = o.eps.empty() ? std::vector<double>{1e-1, 1e-2, 1e-3, 0.0} : o.eps;
  std::string csv = "layer,n_weights,eps,p_min,error\n";
  char line[160];
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto flat = w.layers[l].flatten();
    const auto profile = hyper::truncation_error_profile(flat);
    for (double e : eps) {
      if (e < 0.0) throw ConfigError("--eps values must be >= 0");
      const auto p = analysis::verify_theorem1(flat, e);
      std::snprintf(line, sizeof line, "%zu,%td,%.17g,%zu,%.17g\n", l, flat.size(), e, p, profile[p - 1]);
      csv += line;
    }
  }
  write_text(report_path(o, "theorem1.csv"), csv);
  return 0;
}

int analyze_theorem2(const Options& o) {
  const double eps = o.eps.empty() ? 1e-6 : o.eps.front();
  const std::uint64_t seed = o.seed.value_or(0);
  const auto sweep = analysis::theorem2_sweep(o.instances, o.d, o.m, eps, o.inflate, seed);
  const bool holds = sweep.counterexamples.empty();
  write_text(report_path(o, "theorem2.csv"), sweep.csv);
  write_json(report_path(o, "theorem2.json"), {{"schema_version", cli::kSchemaVersion},
                                               {"instances", sweep.instances},
                                               {"held", sweep.held},
                                               {"count", std::to_string(sweep.held) + "/" + std::to_string(sweep.instances)},
                                               {"skipped", sweep.skipped},
                                               {"holds", holds},
                                               {"counterexamples", sweep.counterexamples},
                                               {"d", o.d},
                                               {"m", o.m},
                                               {"eps", eps},
                                               {"inflate", o.inflate},
                                               {"seed", seed}});
  note(o, std::string("theorem2: holds=") + (holds ? "true" : "false") + " count " + std::to_string(sweep.held) + "/" +
              std::to_string(sweep.instances));
  return 0;
}

int analyze_params(const Options& o) {
  const auto c = load_config(o);
  const auto pc = hyper::parameter_count(c.train.arch, c.train.codec, c.train.hyper, c.data.m, c.train.mode);
  json j = count_json(pc);
  j["schema_version"] = cli::kSchemaVersion;
  j["mode"] = hyper::mode_name(c.train.mode);
  j["truncation"] = c.train.codec.per_layer(c.train.arch.layers());
  write_json(report_path(o, "params.json"), j);
  char line[128];
  std::snprintf(line, sizeof line, "%s: %td parameters, %.4f of full_spectrum", std::string(hyper::mode_name(c.train.mode)).c_str(),
                pc.hyper_params, pc.ratio);
  note(o, line);
  return 0;
}

int analyze_freq_error(const Options& o) {
  const auto c = load_config(o);
  const auto data = load_dataset(c, o);
  const std::size_t i = sample_index(data, o);
  nets::MainNetWeights init;
  double lr = c.train.schedule.lr0;
  if (!o.checkpoint.empty()) {
    const auto st = training::load_checkpoint(o.checkpoint);
    check_checkpoint(st, c, &data);
    init = hyper::reconstruct_weights(st.params, data.eta[i]);
    lr = c.train.lr_finetune;
  } else {
    init = training::xavier_init(c.train.arch, SeedSplitter(c.train.seed).derive("init.main"));
  }
  if (o.lr) lr = *o.lr;
  const int every = o.every.value_or(c.reports.freq_every);
  if (every < 1) throw ConfigError("--every must be >= 1");
  analysis::FrequencyErrorTrace trace(o.k.empty() ? c.reports.freq_k : o.k);
  const Eigen::MatrixXd pts = data.lattice_points();
  const Eigen::VectorXd truth = data.flat_field(i);
  const auto record = [&](const nets::MainNetWeights& w, long step) {
    const Eigen::MatrixXd pred = nets::main_net_forward_batch(pts, w, c.train.activation);
    trace.record(step, pred.transpose(), truth);
  };
  const int epochs = c.train.epochs_finetune;
  const auto r = training::train_main_net(data.sample(i), init, c.train, epochs, lr,
                                          [&](const nets::MainNetWeights& w, long epoch) {
                                            if (epoch % every == 0) record(w, epoch);
                                            return false;
                                          });
  if (epochs % every == 0) record(r.weights, epochs);
  write_text(report_path(o, "freq_error.csv"), trace.csv());
  return 0;
}

int analyze_continuity(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  analysis::ContinuityConfig cc;
  if (!o.config.empty()) {
    const auto c = load_config(o);
    if (c.train.benchmark != physics::Benchmark::Burgers) throw ConfigError("the continuity study runs on Burgers");
    cc.train = c.train;
    cc.seed = c.train.seed;
  }
  if (o.seed) cc.seed = *o.seed;
  if (o.max_epochs) cc.max_epochs = *o.max_epochs;
  if (o.every) cc.check_every = *o.every;
  if (o.lr) cc.lr = *o.lr;
  if (!o.x0.empty()) cc.x0 = o.x0;
  const auto rep = analysis::continuity_study(cc);
  json runs = json::array();
  for (const auto& r : rep.runs) {
    runs.push_back({{"x0", r.x0}, {"rel_l2", r.rel_l2}, {"epochs", r.epochs}, {"reached_target", r.reached_target}});
  }
  write_text(report_path(o, "continuity.csv"), rep.csv());
  write_json(report_path(o, "continuity.json"), {{"schema_version", cli::kSchemaVersion},
                                                 {"x0", cc.x0},
                                                 {"seed", cc.seed},
                                                 {"target", cc.target},
                                                 {"runs", runs},
                                                 {"layers_ordered", rep.layers_ordered},
                                                 {"layers", rep.dist.empty() ? 0 : rep.dist[0].size()},
                                                 {"majority", rep.majority},
                                                 {"all_reached", rep.all_reached},
                                                 {"run", run_block(started)}});
  note(o, "continuity: " + std::to_string(rep.layers_ordered) + " layers ordered, majority " +
              (rep.majority ? "yes" : "no"));
  return 0;
}

int analyze_ablation(const Options& o) {
  auto c = load_config(o);
  Options train_split = o;
  if (o.dataset.empty()) train_split.split = "train";
  const auto data = load_dataset(c, train_split);
  std::vector<physics::ParameterSample> samples;
  for (std::size_t i = 0; i < data.size(); ++i) samples.push_back(data.sample(i));
  std::vector<hyper::HyperMode> modes;
  for (const auto& m : o.modes.empty() ? std::vector<std::string>{"fourier_reduced", "single_hyper"} : o.modes) {
    modes.push_back(hyper::parse_mode(m));
  }
  const auto rep = analysis::ablation_study(samples, c.train, modes);
  json arms = json::array();
  for (const auto& a : rep.arms) {
    arms.push_back({{"mode", hyper::mode_name(a.mode)},
                    {"params", a.params},
                    {"first_epoch_loss", a.epoch_loss.empty() ? 0.0 : a.epoch_loss.front()},
                    {"last_epoch_loss", a.epoch_loss.empty() ? 0.0 : a.epoch_loss.back()}});
  }
  write_text(report_path(o, "ablation.csv"), rep.csv());
  write_json(report_path(o, "ablation.json"), {{"schema_version", cli::kSchemaVersion}, {"arms", arms}});
  return 0;
}

int cmd_analyze(const Options& o) {
  if (o.kind == "spectrum") return analyze_spectrum(o);
  if (o.kind == "freq-error") return analyze_freq_error(o);
  if (o.kind == "theorem1") return analyze_theorem1(o);
  if (o.kind == "theorem2") return analyze_theorem2(o);
  if (o.kind == "params") return analyze_params(o);
  if (o.kind == "continuity") return analyze_continuity(o);
  if (o.kind == "ablation") return analyze_ablation(o);
  throw ConfigError("unknown analysis kind '" + o.kind + "'");
}

void common_flags(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "run configuration (JSON)");
  sub->add_option("--seed", o.seed, "run seed");
  sub->add_option("--out", o.out, "output file or directory");
  sub->add_option("--benchmark", o.benchmark, "antiderivative, advection, burgers or diffusion");
  sub->add_option("--mode", o.mode, "fourier_reduced, full_spectrum or single_hyper");
  sub->add_option("--epochs", o.epochs, "epoch count override");
  sub->add_flag("--quiet", o.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered Fourier-reduced hypernetworks for physics-informed operator learning"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "draw parameter fields and solve the reference PDE");
  common_flags(gen, o);
  gen->add_option("--n", o.n, "number of samples")->required();

  auto* pre = app.add_subcommand("pretrain", "pre-train the hypernetworks");
  common_flags(pre, o);
  pre->add_option("--resume", o.resume, "checkpoint to continue from");

  auto* fin = app.add_subcommand("finetune", "fine-tune the main network for one sample");
  common_flags(fin, o);
  fin->add_option("--checkpoint", o.checkpoint, "pre-trained checkpoint")->required();
  fin->add_option("--index", o.index, "sample index in the split");
  fin->add_option("--split", o.split, "dataset split from the config");
  fin->add_option("--dataset", o.dataset, "dataset file (overrides --split)");

  auto* ev = app.add_subcommand("evaluate", "relative L2 error on a dataset");
  common_flags(ev, o);
  ev->add_option("--checkpoint", o.checkpoint, "pre-trained checkpoint (zero-shot)");
  ev->add_option("--weights", o.weights, "main-network weights file");
  ev->add_option("--index", o.index, "evaluate one sample only");
  ev->add_option("--split", o.split, "dataset split from the config");
  ev->add_option("--dataset", o.dataset, "dataset file (overrides --split)");

  auto* an = app.add_subcommand("analyze", "analysis reports");
  common_flags(an, o);
  an->add_option("kind", o.kind, "spectrum, freq-error, theorem1, theorem2, params, continuity or ablation")
      ->required();
  an->add_option("--checkpoint", o.checkpoint, "pre-trained checkpoint");
  an->add_option("--weights", o.weights, "main-network weights file");
  an->add_option("--index", o.index, "sample index");
  an->add_option("--split", o.split, "dataset split from the config");
  an->add_option("--dataset", o.dataset, "dataset file (overrides --split)");
  an->add_option("--run-id", o.run_id, "prefix for report file names");
  an->add_option("--eps", o.eps, "tolerances (theorem1) or epsilon (theorem2)");
  an->add_option("--instances", o.instances, "theorem2 instance count");
  an->add_option("--d", o.d, "theorem2 row length");
  an->add_option("--m", o.m, "theorem2 basis rows");
  an->add_option("--inflate", o.inflate, "theorem2 alpha multiplier");
  an->add_option("--every", o.every, "snapshot or check interval in steps");
  an->add_option("--k", o.k, "tracked frequencies");
  an->add_option("--lr", o.lr, "learning rate override");
  an->add_option("--max-epochs", o.max_epochs, "continuity epoch budget");
  an->add_option("--x0", o.x0, "continuity initial-condition centres");
  an->add_option("--modes", o.modes, "ablation modes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (pre->parsed()) return cmd_pretrain(o);
    if (fin->parsed()) return cmd_finetune(o);
    if (ev->parsed()) return cmd_evaluate(o);
    return cmd_analyze(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
