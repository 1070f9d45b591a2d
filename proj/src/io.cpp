#include "edq/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace edq {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (key == k) ok = true;
    if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string hexd(double v) {
  std::ostringstream os;
  os << std::hexfloat << v;
  return os.str();
}

double parse_hexd(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad real: " + s);
  return v;
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << std::hexfloat;
  os << "preset=" << preset << ";estimator=" << estimator_name(estimator) << ";";
  if (is_failure()) {
    os << "alpha=" << failure.alpha << ";noise_sd=" << failure.noise_sd
       << ";dose_noise_sd=" << failure.dose_noise_sd << ";threshold=" << failure.threshold
       << ";max_treatments=" << failure.max_treatments
       << ";initial_vital=" << failure.initial_vital
       << ";initial_vital_jitter=" << failure.initial_vital_jitter
       << ";obs_period=" << failure.obs_period << ";horizon=" << failure.horizon
       << ";effect_scale=" << failure.effect_scale << ";rate_obs=" << rate_obs
       << ";rate_int=" << rate_int << ";";
  } else {
    os << "rho=" << tumor.rho << ";K=" << tumor.carrying_capacity << ";beta_c=" << tumor.beta_c
       << ";alpha_r=" << tumor.alpha_r << ";beta_r=" << tumor.beta_r
       << ";chemo_dose=" << tumor.chemo_dose << ";radio_dose=" << tumor.radio_dose
       << ";noise_sd=" << tumor.noise_sd << ";lookback=" << tumor.lookback
       << ";v_max=" << tumor.v_max << ";horizon=" << tumor.horizon
       << ";param_jitter=" << tumor.param_jitter << ";v0_lo=" << tumor.initial_volume_lo
       << ";v0_hi=" << tumor.initial_volume_hi << ";gamma_obs=" << tumor_obs.first
       << ";beta_obs=" << tumor_obs.second << ";gamma_int=" << tumor_int.first
       << ";beta_int=" << tumor_int.second << ";";
  }
  os << "iterations=" << train.iterations << ";batch_size=" << train.batch_size
     << ";step_size=" << train.step_size << ";tau=" << train.tau
     << ";grid_step=" << train.grid_step << ";last_k=" << train.featurizer.last_k
     << ";time_dim=" << train.featurizer.time_dim << ";mark_dim=" << train.featurizer.mark_dim
     << ";hidden=";
  for (std::size_t h : train.hidden) os << h << "+";
  os << ";n_train=" << n_train << ";n_test=" << n_test << ";seeds=";
  for (std::uint64_t s : seeds) os << s << "+";
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return content_hash(canonical()); }

ExperimentConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text);
  reject_unknown_keys(root,
                      {"preset", "simulator", "policy", "estimator", "train", "eval", "seeds",
                       "out_dir"},
                      "top level");
  ExperimentConfig cfg;
  maybe(root, "preset", cfg.preset);
  if (cfg.preset != "failure-short" && cfg.preset != "failure-long" && cfg.preset != "tumor")
    throw std::invalid_argument("config: unknown preset '" + cfg.preset + "'");

  if (root.contains("policy")) {
    const json& pol = root["policy"];
    if (cfg.is_failure()) {
      reject_unknown_keys(pol, {"rate_obs", "rate_int"}, "policy");
      maybe(pol, "rate_obs", cfg.rate_obs);
      maybe(pol, "rate_int", cfg.rate_int);
    } else {
      reject_unknown_keys(pol, {"gamma_obs", "beta_obs", "gamma_int", "beta_int"}, "policy");
      maybe(pol, "gamma_obs", cfg.tumor_obs.first);
      maybe(pol, "beta_obs", cfg.tumor_obs.second);
      maybe(pol, "gamma_int", cfg.tumor_int.first);
      maybe(pol, "beta_int", cfg.tumor_int.second);
    }
  }

  cfg.failure = cfg.preset == "failure-long" ? failure_preset_long(cfg.rate_obs)
                                             : failure_preset_short(cfg.rate_obs);
  if (root.contains("simulator")) {
    const json& sim = root["simulator"];
    if (cfg.is_failure()) {
      reject_unknown_keys(sim,
                          {"alpha", "noise_sd", "dose_noise_sd", "threshold", "max_treatments",
                           "initial_vital", "initial_vital_jitter", "obs_period", "horizon",
                           "effect_scale"},
                          "simulator");
      maybe(sim, "alpha", cfg.failure.alpha);
      maybe(sim, "noise_sd", cfg.failure.noise_sd);
      maybe(sim, "dose_noise_sd", cfg.failure.dose_noise_sd);
      maybe(sim, "threshold", cfg.failure.threshold);
      maybe(sim, "max_treatments", cfg.failure.max_treatments);
      maybe(sim, "initial_vital", cfg.failure.initial_vital);
      maybe(sim, "initial_vital_jitter", cfg.failure.initial_vital_jitter);
      maybe(sim, "obs_period", cfg.failure.obs_period);
      maybe(sim, "horizon", cfg.failure.horizon);
      maybe(sim, "effect_scale", cfg.failure.effect_scale);
    } else {
      reject_unknown_keys(sim,
                          {"rho", "carrying_capacity", "beta_c", "alpha_r", "beta_r",
                           "chemo_dose", "radio_dose", "noise_sd", "lookback", "v_max", "horizon",
                           "param_jitter", "initial_volume_lo", "initial_volume_hi"},
                          "simulator");
      maybe(sim, "rho", cfg.tumor.rho);
      maybe(sim, "carrying_capacity", cfg.tumor.carrying_capacity);
      maybe(sim, "beta_c", cfg.tumor.beta_c);
      maybe(sim, "alpha_r", cfg.tumor.alpha_r);
      maybe(sim, "beta_r", cfg.tumor.beta_r);
      maybe(sim, "chemo_dose", cfg.tumor.chemo_dose);
      maybe(sim, "radio_dose", cfg.tumor.radio_dose);
      maybe(sim, "noise_sd", cfg.tumor.noise_sd);
      maybe(sim, "lookback", cfg.tumor.lookback);
      maybe(sim, "v_max", cfg.tumor.v_max);
      maybe(sim, "horizon", cfg.tumor.horizon);
      maybe(sim, "param_jitter", cfg.tumor.param_jitter);
      maybe(sim, "initial_volume_lo", cfg.tumor.initial_volume_lo);
      maybe(sim, "initial_volume_hi", cfg.tumor.initial_volume_hi);
    }
  }

  if (root.contains("estimator"))
    cfg.estimator = estimator_from_name(root["estimator"].get<std::string>());
  if (root.contains("train")) {
    const json& tr = root["train"];
    reject_unknown_keys(tr,
                        {"iterations", "batch_size", "step_size", "tau", "grid_step", "hidden",
                         "last_k", "time_dim", "mark_dim", "diagnostics_every"},
                        "train");
    maybe(tr, "iterations", cfg.train.iterations);
    maybe(tr, "batch_size", cfg.train.batch_size);
    maybe(tr, "step_size", cfg.train.step_size);
    maybe(tr, "tau", cfg.train.tau);
    maybe(tr, "grid_step", cfg.train.grid_step);
    maybe(tr, "hidden", cfg.train.hidden);
    maybe(tr, "last_k", cfg.train.featurizer.last_k);
    maybe(tr, "time_dim", cfg.train.featurizer.time_dim);
    maybe(tr, "mark_dim", cfg.train.featurizer.mark_dim);
    maybe(tr, "diagnostics_every", cfg.train.diagnostics_every);
  }
  if (root.contains("eval")) {
    const json& ev = root["eval"];
    reject_unknown_keys(ev, {"n_train", "n_test"}, "eval");
    maybe(ev, "n_train", cfg.n_train);
    maybe(ev, "n_test", cfg.n_test);
  }
  maybe(root, "seeds", cfg.seeds);
  maybe(root, "out_dir", cfg.out_dir);
  if (cfg.seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  cfg.train.validate(cfg.estimator == EstimatorKind::FqeDiscretized);
  if (cfg.is_failure()) cfg.failure.validate();
  else cfg.tumor.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
}

std::uint64_t content_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ostringstream os;
  os << "# edq-dataset v1 horizon=" << hexd(data.horizon) << "\n";
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    for (const Event& e : data.trajectories[i].events()) {
      os << i << ',' << hexd(e.time) << ',' << kind_name(e.kind);
      for (double m : e.mark) os << ',' << hexd(m);
      os << '\n';
    }
    os << i << ",OUTCOME," << hexd(data.outcomes[i]) << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << os.str();
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# edq-dataset v1 horizon=", 0) != 0)
    throw std::runtime_error("bad dataset header in " + path);
  const double horizon = parse_hexd(line.substr(std::string("# edq-dataset v1 horizon=").size()));

  Dataset data;
  data.horizon = horizon;
  Trajectory current(horizon);
  long current_id = -1;
  bool have_outcome = false;
  double outcome = 0.0;
  auto flush = [&]() {
    if (current_id < 0) return;
    if (!have_outcome) throw std::runtime_error("dataset: trajectory without OUTCOME row");
    data.trajectories.push_back(std::move(current));
    data.outcomes.push_back(outcome);
    current = Trajectory(horizon);
    have_outcome = false;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() < 3) throw std::runtime_error("dataset: short row: " + line);
    const long id = std::stol(fields[0]);
    if (id != current_id) {
      flush();
      current_id = id;
    }
    if (fields[1] == "OUTCOME") {
      outcome = parse_hexd(fields[2]);
      have_outcome = true;
      continue;
    }
    Event e;
    e.time = parse_hexd(fields[1]);
    e.kind = kind_from_name(fields[2]);
    for (std::size_t i = 3; i < fields.size(); ++i) e.mark.push_back(parse_hexd(fields[i]));
    current.append(e);
  }
  flush();
  return data;
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg, std::uint64_t seed,
                    std::size_t n_trajectories, std::uint64_t dataset_hash) {
  json m;
  m["config_hash"] = cfg.hash();
  m["seed"] = seed;
  m["n_trajectories"] = n_trajectories;
  m["dataset_hash"] = dataset_hash;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
  json m = json::parse(read_file(path));
  Manifest out;
  out.config_hash = m.at("config_hash").get<std::uint64_t>();
  out.seed = m.at("seed").get<std::uint64_t>();
  out.n_trajectories = m.at("n_trajectories").get<std::size_t>();
  out.dataset_hash = m.at("dataset_hash").get<std::uint64_t>();
  return out;
}

void save_checkpoint(const std::string& path, const QFunction& q, std::uint64_t config_hash) {
  std::ostringstream os;
  os << "# edq-checkpoint v1\n";
  os << "config_hash " << config_hash << '\n';
  os << "kind " << estimator_name(q.kind) << '\n';
  os << "featurizer " << q.featurizer.last_k << ' ' << q.featurizer.time_dim << ' '
     << q.featurizer.mark_dim << ' ' << hexd(q.featurizer.embedding_base) << '\n';
  os << "layers";
  for (std::size_t l : q.net.layers()) os << ' ' << l;
  os << '\n';
  os << "params " << q.net.params().size() << '\n';
  for (double p : q.net.params()) os << hexd(p) << '\n';
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << os.str();
  if (!out) throw std::runtime_error("write failed: " + path);
}

QFunction load_checkpoint(const std::string& path, std::uint64_t* config_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line, tag;
  if (!std::getline(in, line) || line != "# edq-checkpoint v1")
    throw std::runtime_error("bad checkpoint header in " + path);
  std::uint64_t hash = 0;
  std::string kind_str;
  FeaturizerConfig feat;
  std::vector<std::size_t> layers;
  std::size_t n_params = 0;

  in >> tag >> hash;
  if (tag != "config_hash") throw std::runtime_error("checkpoint: expected config_hash");
  in >> tag >> kind_str;
  if (tag != "kind") throw std::runtime_error("checkpoint: expected kind");
  std::string base_str;
  in >> tag >> feat.last_k >> feat.time_dim >> feat.mark_dim >> base_str;
  if (tag != "featurizer") throw std::runtime_error("checkpoint: expected featurizer");
  feat.embedding_base = parse_hexd(base_str);
  in >> tag;
  if (tag != "layers") throw std::runtime_error("checkpoint: expected layers");
  std::getline(in, line);
  {
    std::istringstream ls(line);
    std::size_t v;
    while (ls >> v) layers.push_back(v);
  }
  in >> tag >> n_params;
  if (tag != "params") throw std::runtime_error("checkpoint: expected params");

  RngStream dummy(0);
  QFunction q{estimator_from_name(kind_str), feat, MlpQ(layers, dummy)};
  if (q.net.params().size() != n_params)
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < n_params; ++i) {
    std::string v;
    if (!(in >> v)) throw std::runtime_error("checkpoint: truncated parameters");
    q.net.mutable_params()[i] = parse_hexd(v);
  }
  if (config_hash) *config_hash = hash;
  return q;
}

LocalIndependenceGraph load_graph(const std::string& path) {
  json g = json::parse(read_file(path));
  reject_unknown_keys(g, {"nodes", "edges", "unobserved_order"}, "graph");
  LocalIndependenceGraph out;
  out.nodes = g.at("nodes").get<std::vector<std::string>>();
  for (const auto& e : g.at("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::invalid_argument("graph: edges must be [from, to] pairs");
    out.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  out.unobserved_order = g.at("unobserved_order").get<std::vector<std::string>>();
  out.validate();
  return out;
}

}  // namespace edq
