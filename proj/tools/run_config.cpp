#include "run_config.hpp"

#include <limits>
#include <optional>
#include <set>

#include "lfr/errors.hpp"
#include "lfr/io/binary.hpp"

namespace lfr::cli {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so anything
// left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void integer(const std::string& key, int& out) {
    long v = out;
    integer(key, v);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(name(key) + " is out of range");
    }
    out = static_cast<int>(v);
  }
  void integer(const std::string& key, long& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(name(key) + " must be an integer");
      out = v->get<long>();
    }
  }
  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long>() < 0)) throw ConfigError(name(key) + " must be a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void size(const std::string& key, std::size_t& out) {
    std::uint64_t v = out;
    unsigned64(key, v);
    out = static_cast<std::size_t>(v);
  }
  void number(const std::string& key, double& out) {
    if (const auto* v = take(key)) {
      if (!v->is_number()) throw ConfigError(name(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const auto* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(name(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  bool string(const std::string& key, std::string& out) {
    if (const auto* v = take(key)) {
      if (!v->is_string()) throw ConfigError(name(key) + " must be a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }
  void integers(const std::string& key, std::vector<int>& out) {
    if (const auto* v = take(key)) {
      if (!v->is_array()) throw ConfigError(name(key) + " must be an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(name(key) + " must be an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }
  std::optional<Section> sub(const std::string& key) {
    if (const auto* v = take(key)) return Section(*v, name(key));
    return std::nullopt;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + name(k));
    }
  }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  std::string name(const std::string& key) const { return "'" + (path_.empty() ? key : path_ + "." + key) + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

training::ScheduleUnit parse_unit(const std::string& s) {
  if (s == "steps") return training::ScheduleUnit::Steps;
  if (s == "epochs") return training::ScheduleUnit::Epochs;
  throw ConfigError("schedule.unit must be 'steps' or 'epochs'");
}

}  // namespace

RunConfig RunConfig::defaults(physics::Benchmark kind) {
  RunConfig c;
  c.train = training::TrainConfig::preset(kind);
  c.data = problems::BenchmarkSpec::preset(kind);
  return c;
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base) {
  Section root(j, "");
  if (!root.has("schema_version")) throw ConfigError("config needs schema_version");
  int version = 0;
  root.integer("schema_version", version);
  if (version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }

  std::string bench = "antiderivative";
  root.string("benchmark", bench);
  RunConfig c = defaults(physics::parse_benchmark(bench));
  auto& t = c.train;

  root.unsigned64("seed", t.seed);
  std::string s;
  if (root.string("mode", s)) t.mode = hyper::parse_mode(s);
  if (root.string("activation", s)) t.activation = nets::parse_activation(s);
  root.integer("epochs_pretrain", t.epochs_pretrain);
  root.integer("epochs_finetune", t.epochs_finetune);
  root.number("lr_finetune", t.lr_finetune);
  root.number("lambda_bc", t.lambda_bc);
  root.number("lambda_ic", t.lambda_ic);
  root.number("clip_norm", t.clip_norm);
  root.number("divergence", t.divergence);
  root.integer("checkpoint_every", t.checkpoint_every);

  if (auto m = root.sub("main")) {
    m->integer("width", t.arch.width);
    m->integer("hidden_layers", t.arch.hidden_layers);
    m->finish();
  }
  if (auto h = root.sub("hyper")) {
    h->integer("width", t.hyper.width);
    h->integer("hidden_layers", t.hyper.hidden_layers);
    if (h->string("activation", s)) t.hyper.act = nets::parse_activation(s);
    h->number("init_std", t.hyper.init_std);
    if (h->string("gain", s)) t.hyper.gain = hyper::parse_gain(s);
    h->finish();
  }
  if (auto k = root.sub("codec")) {
    k->size("p_input", t.codec.p_input);
    k->size("p_hidden", t.codec.p_hidden);
    k->size("p_output", t.codec.p_output);
    k->finish();
  }
  if (auto sc = root.sub("schedule")) {
    sc->number("lr0", t.schedule.lr0);
    sc->number("decay", t.schedule.decay);
    sc->integer("interval", t.schedule.interval);
    if (sc->string("unit", s)) t.schedule.unit = parse_unit(s);
    sc->integer("horizon", t.schedule.horizon);
    sc->finish();
  }
  if (auto col = root.sub("collocation")) {
    col->integer("residual", t.counts.residual);
    col->integer("bc", t.counts.bc);
    col->integer("ic", t.counts.ic);
    col->finish();
  }
  if (auto pc = root.sub("constants")) {
    pc->number("nu", t.constants.nu);
    pc->number("d", t.constants.d);
    pc->number("k", t.constants.k);
    pc->finish();
  }
  if (auto d = root.sub("data")) {
    d->integer("m", c.data.m);
    d->integer("nx", c.data.nx);
    d->integer("nt", c.data.nt);
    d->number("length_scale", c.data.grf.length_scale);
    d->finish();
  }
  if (auto ds = root.sub("datasets")) {
    for (const auto& [split, v] : j.at("datasets").items()) {
      std::string p;
      ds->string(split, p);
      c.datasets[split] = resolve(base, p);
    }
  }
  if (root.string("out_dir", s)) c.out_dir = resolve(base, s);
  if (auto r = root.sub("reports")) {
    r->boolean("spectrum", c.reports.spectrum);
    r->boolean("params", c.reports.params);
    r->integer("freq_every", c.reports.freq_every);
    r->integers("freq_k", c.reports.freq_k);
    r->finish();
  }
  root.finish();

  // the solvers share the PDE constants with the loss
  c.data.burgers.nu = t.constants.nu;
  c.data.diffusion.d = t.constants.d;
  c.data.diffusion.k = t.constants.k;
  t.arch.in_dim = t.problem().in_dim();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json RunConfig::to_json() const {
  const auto& t = train;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["benchmark"] = std::string(physics::benchmark_name(t.benchmark));
  j["seed"] = t.seed;
  j["mode"] = std::string(hyper::mode_name(t.mode));
  j["activation"] = std::string(nets::activation_name(t.activation));
  j["epochs_pretrain"] = t.epochs_pretrain;
  j["epochs_finetune"] = t.epochs_finetune;
  j["lr_finetune"] = t.lr_finetune;
  j["lambda_bc"] = t.lambda_bc;
  j["lambda_ic"] = t.lambda_ic;
  j["clip_norm"] = t.clip_norm;
  j["divergence"] = t.divergence;
  j["checkpoint_every"] = t.checkpoint_every;
  j["main"] = {{"width", t.arch.width}, {"hidden_layers", t.arch.hidden_layers}};
  j["hyper"] = {{"width", t.hyper.width},
                {"hidden_layers", t.hyper.hidden_layers},
                {"activation", std::string(nets::activation_name(t.hyper.act))},
                {"init_std", t.hyper.init_std},
                {"gain", std::string(hyper::gain_name(t.hyper.gain))}};
  j["codec"] = {{"p_input", t.codec.p_input}, {"p_hidden", t.codec.p_hidden}, {"p_output", t.codec.p_output}};
  j["schedule"] = {{"lr0", t.schedule.lr0},
                   {"decay", t.schedule.decay},
                   {"interval", t.schedule.interval},
                   {"unit", t.schedule.unit == training::ScheduleUnit::Steps ? "steps" : "epochs"},
                   {"horizon", t.schedule.horizon}};
  j["collocation"] = {{"residual", t.counts.residual}, {"bc", t.counts.bc}, {"ic", t.counts.ic}};
  j["constants"] = {{"nu", t.constants.nu}, {"d", t.constants.d}, {"k", t.constants.k}};
  j["data"] = {{"m", data.m}, {"nx", data.nx}, {"nt", data.nt}, {"length_scale", data.grf.length_scale}};
  j["datasets"] = json::object();
  for (const auto& [k, v] : datasets) j["datasets"][k] = v.string();
  j["out_dir"] = out_dir.string();
  j["reports"] = {{"spectrum", reports.spectrum},
                  {"params", reports.params},
                  {"freq_every", reports.freq_every},
                  {"freq_k", reports.freq_k}};
  return j;
}

void RunConfig::validate() const {
  train.validate();
  data.validate();
  if (data.kind != train.benchmark) throw ConfigError("data and training benchmarks differ");
  if (reports.freq_every < 1) throw ConfigError("reports.freq_every must be >= 1");
  for (int k : reports.freq_k) {
    if (k < 0) throw ConfigError("reports.freq_k entries must be >= 0");
  }
}

const std::filesystem::path& RunConfig::dataset(const std::string& split) const {
  auto it = datasets.find(split);
  if (it == datasets.end()) throw ConfigError("config has no dataset for split '" + split + "'");
  return it->second;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace lfr::cli
