#include "olab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "olab/analysis.hpp"
#include "olab/partition.hpp"

namespace olab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

// Strict view of one JSON object: unknown keys are rejected up front.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, _] : j_.items()) {
      if (!allowed.count(key)) fail(field(key), "unknown key");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }

  std::optional<double> real(const char* key) const {
    if (!has(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    return x;
  }

  std::optional<std::uint64_t> count(const char* key) const {
    if (!has(key)) return std::nullopt;
    return as_count(j_.at(key), field(key));
  }

  std::optional<bool> flag(const char* key) const {
    if (!has(key)) return std::nullopt;
    if (!j_.at(key).is_boolean()) fail(field(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::optional<std::string> text(const char* key) const {
    if (!has(key)) return std::nullopt;
    if (!j_.at(key).is_string()) fail(field(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  static std::uint64_t as_count(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) fail(where, "must be >= 0");
    fail(where, "expected a non-negative integer");
  }

 private:
  const json& j_;
  std::string path_;
};

template <typename T>
void assign(T& target, const std::optional<T>& value) {
  if (value) target = *value;
}

std::size_t positive(const Section& s, const char* key, std::size_t fallback) {
  const auto v = s.count(key);
  if (v && *v < 1) fail(s.field(key), "must be >= 1");
  return v ? static_cast<std::size_t>(*v) : fallback;
}

std::vector<std::uint64_t> count_list(const Section& s, const char* key, bool positive_only) {
  const json& arr = s.at(key);
  const std::string where = s.field(key);
  if (!arr.is_array()) fail(where, "expected an array");
  if (arr.empty()) fail(where, "must not be empty");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::uint64_t v = Section::as_count(arr[i], where + "[" + std::to_string(i) + "]");
    if (positive_only && v < 1) fail(where + "[" + std::to_string(i) + "]", "must be >= 1");
    out.push_back(v);
  }
  return out;
}

void check_unit(const std::string& where, const std::optional<double>& v, bool include_one) {
  if (!v) return;
  if (!(*v >= 0.0 && (include_one ? *v <= 1.0 : *v < 1.0))) {
    fail(where, include_one ? "must lie in [0, 1]" : "must lie in [0, 1)");
  }
}

void parse_hyper(const json& j, RunConfig& cfg) {
  const Section s(j, "hyper",
                  {"m", "d", "tau", "K", "alpha", "eta", "lr_scale", "beta", "mu", "alpha_e", "reset_local_momentum"});
  cfg.m = positive(s, "m", cfg.m);
  cfg.d = positive(s, "d", cfg.d);
  cfg.tau = positive(s, "tau", cfg.tau);
  cfg.K = positive(s, "K", cfg.K);
  cfg.alpha = s.real("alpha");
  check_unit(s.field("alpha"), cfg.alpha, true);
  if (s.has("eta")) {
    const json& e = s.at("eta");
    if (e.is_string()) {
      if (e.get<std::string>() != "theorem") fail(s.field("eta"), "expected a number or \"theorem\"");
      cfg.eta.reset();
    } else {
      cfg.eta = s.real("eta");
      if (!(*cfg.eta > 0.0)) fail(s.field("eta"), "must be > 0");
    }
  }
  cfg.lr_scale = s.real("lr_scale");
  if (cfg.lr_scale && !(*cfg.lr_scale > 0.0)) fail(s.field("lr_scale"), "must be > 0");
  cfg.beta = s.real("beta");
  check_unit(s.field("beta"), cfg.beta, false);
  cfg.mu = s.real("mu");
  check_unit(s.field("mu"), cfg.mu, false);
  cfg.alpha_e = s.real("alpha_e");
  if (cfg.alpha_e && !(*cfg.alpha_e >= 0.0)) fail(s.field("alpha_e"), "must be >= 0");
  assign(cfg.reset_local_momentum, s.flag("reset_local_momentum"));
}

void parse_objective(const json& j, ObjectiveConfig& o) {
  const Section s(j, "objective",
                  {"type", "seed", "spread", "condition", "sigma", "samples", "num_classes", "separation", "lambda",
                   "batch", "partition"});
  assign(o.type, s.text("type"));
  if (o.type != "quadratic" && o.type != "logistic") fail(s.field("type"), "expected \"quadratic\" or \"logistic\"");
  assign(o.seed, s.count("seed"));
  assign(o.spread, s.real("spread"));
  if (!(o.spread >= 0.0)) fail(s.field("spread"), "must be >= 0");
  assign(o.condition, s.real("condition"));
  if (!(o.condition >= 1.0)) fail(s.field("condition"), "must be >= 1");
  assign(o.sigma, s.real("sigma"));
  if (!(o.sigma >= 0.0)) fail(s.field("sigma"), "must be >= 0");
  o.samples = positive(s, "samples", o.samples);
  o.num_classes = positive(s, "num_classes", o.num_classes);
  if (o.num_classes < 2) fail(s.field("num_classes"), "must be >= 2");
  assign(o.separation, s.real("separation"));
  if (!(o.separation >= 0.0)) fail(s.field("separation"), "must be >= 0");
  assign(o.lambda, s.real("lambda"));
  if (!(o.lambda > 0.0)) fail(s.field("lambda"), "must be > 0");
  o.batch = positive(s, "batch", o.batch);
  if (s.has("partition")) {
    const Section p(s.at("partition"), s.field("partition"), {"mode", "n_total", "n_skew"});
    assign(o.partition.mode, p.text("mode"));
    if (o.partition.mode != "iid" && o.partition.mode != "label_skew") {
      fail(p.field("mode"), "expected \"iid\" or \"label_skew\"");
    }
    assign(o.partition.n_total, p.count("n_total"));
    assign(o.partition.n_skew, p.count("n_skew"));
  }
}

void parse_timing(const json& j, TimingModel& t, bool& payload_given) {
  const Section s(j, "timing",
                  {"compute_mean", "compute_jitter", "straggler_prob", "straggler_factor", "latency", "bandwidth",
                   "payload_bytes"});
  assign(t.compute_mean, s.real("compute_mean"));
  assign(t.compute_jitter, s.real("compute_jitter"));
  assign(t.straggler_prob, s.real("straggler_prob"));
  assign(t.straggler_factor, s.real("straggler_factor"));
  assign(t.latency, s.real("latency"));
  assign(t.bandwidth, s.real("bandwidth"));
  payload_given = s.has("payload_bytes");
  assign(t.payload_bytes, s.real("payload_bytes"));
  try {
    t.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what());  // already carries the "timing." prefix
  }
}

void parse_sweep(const json& j, RunConfig& cfg) {
  const Section s(j, "sweep", {"algorithm", "tau", "alpha", "K", "seeds"});
  SweepAxes axes;
  if (s.has("algorithm")) {
    const json& arr = s.at("algorithm");
    if (!arr.is_array() || arr.empty()) fail(s.field("algorithm"), "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = s.field("algorithm") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_string()) fail(where, "expected a string");
      try {
        axes.algorithm.push_back(parse_algorithm(arr[i].get<std::string>()));
      } catch (const ConfigError&) {
        fail(where, "unknown algorithm '" + arr[i].get<std::string>() + "'");
      }
    }
  }
  if (s.has("tau")) {
    for (auto v : count_list(s, "tau", true)) axes.tau.push_back(static_cast<std::size_t>(v));
  }
  if (s.has("K")) {
    for (auto v : count_list(s, "K", true)) axes.K.push_back(static_cast<std::size_t>(v));
  }
  if (s.has("seeds")) axes.seeds = count_list(s, "seeds", false);
  if (s.has("alpha")) {
    const json& arr = s.at("alpha");
    if (!arr.is_array() || arr.empty()) fail(s.field("alpha"), "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = s.field("alpha") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_number()) fail(where, "expected a number");
      const double a = arr[i].get<double>();
      check_unit(where, a, true);
      axes.alpha.push_back(a);
    }
  }
  cfg.sweep = std::move(axes);
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

bool overlap_local_kind(AlgorithmKind kind) {
  return kind == AlgorithmKind::OverlapLocal || kind == AlgorithmKind::OverlapLocalMomentum;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  const Section root(doc, "",
                     {"algorithm", "run_id", "hyper", "objective", "init", "timing", "seeds", "output_dir", "stride",
                      "verification_mode", "sweep"});
  RunConfig cfg;
  if (auto name = root.text("algorithm")) {
    try {
      cfg.algorithm = parse_algorithm(*name);
    } catch (const ConfigError&) {
      fail("algorithm", "unknown algorithm '" + *name + "'");
    }
  }
  assign(cfg.run_id, root.text("run_id"));
  if (cfg.run_id.empty() || cfg.run_id.find_first_of("/\\ ") != std::string::npos) {
    fail("run_id", "must be non-empty without spaces or path separators");
  }
  if (root.has("hyper")) parse_hyper(root.at("hyper"), cfg);
  if (root.has("objective")) parse_objective(root.at("objective"), cfg.objective);
  if (root.has("init")) {
    const Section s(root.at("init"), "init", {"mode", "scale"});
    assign(cfg.init.mode, s.text("mode"));
    if (cfg.init.mode != "zero" && cfg.init.mode != "gaussian" && cfg.init.mode != "minimizer") {
      fail(s.field("mode"), "expected \"zero\", \"gaussian\" or \"minimizer\"");
    }
    assign(cfg.init.scale, s.real("scale"));
    if (!(cfg.init.scale >= 0.0)) fail(s.field("scale"), "must be >= 0");
  }
  bool payload_given = false;
  if (root.has("timing")) parse_timing(root.at("timing"), cfg.timing, payload_given);
  if (!payload_given) cfg.timing.payload_bytes = 8.0 * static_cast<double>(cfg.d);
  if (root.has("seeds")) cfg.seeds = count_list(root, "seeds", false);
  assign(cfg.output_dir, root.text("output_dir"));
  cfg.stride = positive(root, "stride", cfg.stride);
  assign(cfg.verification_mode, root.flag("verification_mode"));
  if (root.has("sweep")) parse_sweep(root.at("sweep"), cfg);

  if (cfg.objective.type == "logistic" && cfg.d < 2) fail("hyper.d", "logistic objectives need d >= 2");
  if (cfg.init.mode == "minimizer" && cfg.objective.type != "quadratic") {
    fail("init.mode", "\"minimizer\" needs a quadratic objective");
  }
  if (!cfg.eta && cfg.objective.type != "quadratic") {
    fail("hyper.eta", "\"theorem\" needs an objective with an exact L (quadratic)");
  }
  if (cfg.alpha && !cfg.verification_mode && (*cfg.alpha == 0.0 || *cfg.alpha == 1.0)) {
    fail("hyper.alpha", "0 and 1 are only allowed with verification_mode");
  }
  if (cfg.algorithm == AlgorithmKind::SyncSGD && cfg.tau != 1 && !cfg.sweep) {
    fail("hyper.tau", "sync_sgd requires tau = 1");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + line_column(text, e.byte) + ": invalid JSON");
  }
  try {
    return parse_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("OVERLAP_LAB_SEED: empty entry in '" + text + "'");
    const std::string token = item.substr(first, last - first + 1);
    if (token.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("OVERLAP_LAB_SEED: '" + token + "' is not a non-negative integer");
    }
    try {
      seeds.push_back(std::stoull(token));
    } catch (const std::out_of_range&) {
      throw ConfigError("OVERLAP_LAB_SEED: '" + token + "' is out of range");
    }
  }
  if (seeds.empty()) throw ConfigError("OVERLAP_LAB_SEED: no seeds given");
  return seeds;
}

std::unique_ptr<Ensemble> build_ensemble(const RunConfig& cfg) {
  const ObjectiveConfig& o = cfg.objective;
  const RngStream root(o.seed);
  if (o.type == "quadratic") {
    return std::make_unique<QuadraticEnsemble>(
        make_quadratic(cfg.m, cfg.d, o.spread, o.condition, o.sigma, root.derive("objective")));
  }
  const ClassificationPool pool = make_classification(o.samples, cfg.d, o.num_classes, o.separation, root.derive("pool"));
  PartitionPlan plan;
  if (o.partition.mode == "iid") {
    if (o.samples < cfg.m) fail("objective.samples", "must be >= m");
    plan = iid_partition(o.samples, cfg.m, root.derive("partition"));
  } else {
    const std::size_t n_total = o.partition.n_total ? o.partition.n_total : o.samples / cfg.m;
    if (n_total < 1 || n_total * cfg.m > o.samples) {
      fail("objective.partition.n_total", "m * n_total must not exceed samples");
    }
    if (o.partition.n_skew > n_total) fail("objective.partition.n_skew", "must not exceed n_total");
    plan = label_skew_partition(pool.classes, cfg.m, n_total, o.partition.n_skew, root.derive("partition"));
  }
  return std::make_unique<LogisticEnsemble>(make_logistic(pool, plan, o.lambda, o.batch));
}

std::optional<double> exact_smoothness(const Ensemble& ensemble) {
  if (const auto* q = dynamic_cast<const QuadraticEnsemble*>(&ensemble)) return exact_constants(*q).L;
  return std::nullopt;
}

ParamVector build_init(const RunConfig& cfg, const Ensemble& ensemble) {
  ParamVector x(ensemble.dim(), 0.0);
  if (cfg.init.mode == "gaussian") {
    RngStream r = RngStream(cfg.objective.seed).derive("init");
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = cfg.init.scale * r.normal();
  } else if (cfg.init.mode == "minimizer") {
    const auto* q = dynamic_cast<const QuadraticEnsemble*>(&ensemble);
    if (!q) fail("init.mode", "\"minimizer\" needs a quadratic objective");
    x = q->minimizer();
  }
  return x;
}

ResolvedRun resolve(const RunConfig& cfg, AlgorithmKind kind, std::size_t tau, std::optional<double> alpha,
                    std::size_t K, std::uint64_t seed, const Ensemble& ensemble) {
  ResolvedRun r;
  r.spec.kind = kind;
  r.spec.alpha = alpha.value_or(tau == 1 ? 0.5 : 0.6);
  r.spec.beta = cfg.beta.value_or(0.7);
  r.spec.mu = cfg.mu.value_or(cfg.verification_mode ? 0.0 : 0.9);
  r.spec.alpha_e = cfg.alpha_e.value_or(r.spec.alpha / static_cast<double>(cfg.m));
  r.spec.reset_local_momentum = cfg.reset_local_momentum;
  r.lr_scale = cfg.lr_scale.value_or(overlap_local_kind(kind) && tau == 1 && !alpha ? 1.5 : 1.0);

  HyperParams& hp = r.hyper;
  hp.m = cfg.m;
  hp.d = cfg.d;
  hp.tau = tau;
  hp.K = K;
  hp.alpha = r.spec.alpha;
  hp.beta = r.spec.beta;
  hp.mu = r.spec.mu;
  hp.seed = seed;
  if (cfg.eta) {
    hp.eta = *cfg.eta * r.lr_scale;
  } else {
    const auto L = exact_smoothness(ensemble);
    if (!L) fail("hyper.eta", "\"theorem\" needs an objective with an exact L (quadratic)");
    hp.eta = theorem_lr(*L, cfg.m, K);
  }
  try {
    hp.validate(cfg.verification_mode);
    r.spec.validate(cfg.m, tau);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("hyper.") + e.what());
  }
  r.timing = cfg.timing;
  return r;
}

json resolved_json(const RunConfig& cfg) {
  const double alpha = cfg.alpha.value_or(cfg.tau == 1 ? 0.5 : 0.6);
  const bool overlap_default = overlap_local_kind(cfg.algorithm) && cfg.tau == 1 && !cfg.alpha;
  json hyper = {
      {"m", cfg.m},
      {"d", cfg.d},
      {"tau", cfg.tau},
      {"K", cfg.K},
      {"alpha", alpha},
      {"lr_scale", cfg.lr_scale.value_or(overlap_default ? 1.5 : 1.0)},
      {"beta", cfg.beta.value_or(0.7)},
      {"mu", cfg.mu.value_or(cfg.verification_mode ? 0.0 : 0.9)},
      {"alpha_e", cfg.alpha_e.value_or(alpha / static_cast<double>(cfg.m))},
      {"reset_local_momentum", cfg.reset_local_momentum},
  };
  hyper["eta"] = cfg.eta ? json(*cfg.eta) : json("theorem");

  const ObjectiveConfig& o = cfg.objective;
  json objective = {{"type", o.type}, {"seed", o.seed}};
  if (o.type == "quadratic") {
    objective.update({{"spread", o.spread}, {"condition", o.condition}, {"sigma", o.sigma}});
  } else {
    objective.update({{"samples", o.samples},
                      {"num_classes", o.num_classes},
                      {"separation", o.separation},
                      {"lambda", o.lambda},
                      {"batch", o.batch},
                      {"partition",
                       {{"mode", o.partition.mode},
                        {"n_total", o.partition.n_total ? o.partition.n_total : o.samples / cfg.m},
                        {"n_skew", o.partition.n_skew}}}});
  }
  const TimingModel& t = cfg.timing;
  json doc = {
      {"algorithm", std::string(to_string(cfg.algorithm))},
      {"run_id", cfg.run_id},
      {"hyper", hyper},
      {"objective", objective},
      {"init", {{"mode", cfg.init.mode}, {"scale", cfg.init.scale}}},
      {"timing",
       {{"compute_mean", t.compute_mean},
        {"compute_jitter", t.compute_jitter},
        {"straggler_prob", t.straggler_prob},
        {"straggler_factor", t.straggler_factor},
        {"latency", t.latency},
        {"bandwidth", t.bandwidth},
        {"payload_bytes", t.payload_bytes}}},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir},
      {"stride", cfg.stride},
      {"verification_mode", cfg.verification_mode},
  };
  if (cfg.sweep) {
    json axes = json::object();
    json algs = json::array();
    for (auto k : cfg.sweep->algorithm) algs.push_back(std::string(to_string(k)));
    axes["algorithm"] = algs.empty() ? json::array({std::string(to_string(cfg.algorithm))}) : algs;
    axes["tau"] = cfg.sweep->tau.empty() ? json::array({cfg.tau}) : json(cfg.sweep->tau);
    axes["alpha"] = cfg.sweep->alpha.empty() ? json::array({"default"}) : json(cfg.sweep->alpha);
    axes["K"] = cfg.sweep->K.empty() ? json::array({cfg.K}) : json(cfg.sweep->K);
    axes["seeds"] = cfg.sweep->seeds.empty() ? json(cfg.seeds) : json(cfg.sweep->seeds);
    doc["sweep"] = axes;
  }
  return doc;
}

}  // namespace olab
