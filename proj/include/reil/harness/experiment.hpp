#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "reil/core/dataset.hpp"
#include "reil/envs/cartpole.hpp"
#include "reil/envs/navsim.hpp"
#include "reil/harness/metrics.hpp"
#include "reil/train/loops.hpp"
#include "reil/train/state_io.hpp"

namespace reil::harness {

enum class EnvKind { Cartpole, Navsim };

inline std::string to_string(EnvKind e) { return e == EnvKind::Cartpole ? "CARTPOLE" : "NAVSIM"; }

inline EnvKind env_kind_from_string(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "CARTPOLE") return EnvKind::Cartpole;
  if (s == "NAVSIM") return EnvKind::Navsim;
  throw Error(ErrorCode::ConfigError, "env: unknown value '" + s + "'");
}

struct ModelSettings {
  nn::ModelKind kind = nn::ModelKind::Mlp;
  std::vector<Eigen::Index> hidden{64, 64};
  Eigen::Index latent_dim = 100;
  Eigen::Index tc_filters = 30;
  Eigen::Index attn_key_dim = 16;
  Eigen::Index attn_value_dim = 16;
  Eigen::Index seq_len = 75;
  bool with_tf_head = false;
};

struct ExperimentConfig {
  EnvKind env = EnvKind::Cartpole;
  train::AlgorithmConfig algorithm = train::cartpole_defaults();
  RewardSpec reward = RewardSpec::constant_one();
  int episodes = 1;
  int runs = 1;
  std::string out_dir = "out";
  bool live = false;
  int port = 8765;
  double live_rate_hz = 10.0;
  ModelSettings model;
  envs::SupervisorGate gate;
  bool stop_on_success = false;
  std::int64_t max_env_steps = 0;
  std::size_t memory_capacity = 1'000'000;
  int cartpole_success_steps = 3000;
  int time_limit = 0;  // 0: environment default
  std::vector<std::string> scenes;
  // Offline runs: learn from `dataset` for `offline_epochs`, then evaluate.
  bool offline = false;
  std::string dataset;
  int offline_epochs = 10;
  int eval_episodes = 30;
};

/// Defaults for one environment and mode, before any file overrides.
inline ExperimentConfig default_experiment(EnvKind env, train::Mode mode = train::Mode::Reil) {
  ExperimentConfig c;
  c.env = env;
  if (env == EnvKind::Cartpole) {
    c.algorithm = train::cartpole_defaults(mode);
    c.reward = mode == train::Mode::Iarl ? RewardSpec::iarl(c.algorithm.gamma)
                                         : RewardSpec::constant_one(c.algorithm.gamma);
    c.stop_on_success = true;
    c.live_rate_hz = 10.0;
  } else {
    c.algorithm = train::navsim_defaults(mode);
    c.reward = mode == train::Mode::Iarl ? RewardSpec::iarl(c.algorithm.gamma)
                                         : RewardSpec::episodic_universal(c.algorithm.gamma);
    c.model.kind = nn::ModelKind::Snail;
    c.model.with_tf_head = true;
    c.live_rate_hz = 2.0;
  }
  return c;
}

/// Reward spec implied by the mode and environment at the given discount.
inline RewardSpec default_reward(EnvKind env, train::Mode mode, double gamma) {
  if (mode == train::Mode::Iarl) return RewardSpec::iarl(gamma);
  return env == EnvKind::Cartpole ? RewardSpec::constant_one(gamma) : RewardSpec::episodic_universal(gamma);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json model = {{"kind", c.model.kind == nn::ModelKind::Mlp ? "MLP" : "SNAIL"},
                          {"hidden", c.model.hidden},
                          {"latent_dim", c.model.latent_dim},
                          {"tc_filters", c.model.tc_filters},
                          {"attn_key_dim", c.model.attn_key_dim},
                          {"attn_value_dim", c.model.attn_value_dim},
                          {"seq_len", c.model.seq_len},
                          {"with_tf_head", c.model.with_tf_head}};
  nlohmann::json reward = {{"r_int", c.reward.r_int},
                           {"gamma", c.reward.gamma},
                           {"task_reward_kind", std::string(reil::to_string(c.reward.task_reward_kind))},
                           {"r_task_min", c.reward.r_task_min}};
  return {{"env", to_string(c.env)},
          {"algorithm", train::to_json(c.algorithm)},
          {"reward", reward},
          {"episodes", c.episodes},
          {"runs", c.runs},
          {"out_dir", c.out_dir},
          {"live", c.live},
          {"port", c.port},
          {"live_rate_hz", c.live_rate_hz},
          {"model", model},
          {"gate", {{"handback_margin", c.gate.handback_margin}, {"handback_hold", c.gate.handback_hold}}},
          {"stop_on_success", c.stop_on_success},
          {"max_env_steps", c.max_env_steps},
          {"memory_capacity", c.memory_capacity},
          {"cartpole_success_steps", c.cartpole_success_steps},
          {"time_limit", c.time_limit},
          {"scenes", c.scenes},
          {"offline", c.offline},
          {"dataset", c.dataset},
          {"offline_epochs", c.offline_epochs},
          {"eval_episodes", c.eval_episodes}};
}

namespace detail {
inline void reject_unknown(const nlohmann::json& j, const nlohmann::json& known, const std::string& prefix) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, (prefix.empty() ? "config" : prefix) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw Error(ErrorCode::ConfigError, prefix + it.key() + ": unknown field");
  }
}

template <class V>
void read(const nlohmann::json& j, const char* key, V& out, const std::string& prefix = "") {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<V>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, prefix + key + ": wrong type");
  }
}
}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::ConfigError, field + ": " + why);
  };
  c.algorithm.validate();
  c.reward.validate();
  if (c.episodes < 0) fail("episodes", "must be >= 0");
  if (c.runs < 1) fail("runs", "must be >= 1");
  if (c.port < 0 || c.port > 65535) fail("port", "out of range");
  if (!(c.live_rate_hz > 0.0)) fail("live_rate_hz", "must be positive");
  if (c.gate.handback_hold < 0) fail("gate.handback_hold", "must be >= 0");
  if (!(c.gate.handback_margin > 0.0 && c.gate.handback_margin < 1.0)) {
    fail("gate.handback_margin", "must lie in (0, 1) so the inner region sits inside the acceptable set");
  }
  if (c.memory_capacity < 1) fail("memory_capacity", "must be positive");
  if (c.cartpole_success_steps < 1) fail("cartpole_success_steps", "must be positive");
  if (c.time_limit < 0) fail("time_limit", "must be >= 0");
  if (c.offline && c.dataset.empty()) fail("dataset", "required for offline runs");
  if (c.offline_epochs < 0) fail("offline_epochs", "must be >= 0");
  if (c.eval_episodes < 0) fail("eval_episodes", "must be >= 0");
  if (c.reward.gamma != c.algorithm.gamma) fail("reward.gamma", "must equal algorithm.gamma");
  for (auto h : c.model.hidden) {
    if (h < 1) fail("model.hidden", "widths must be positive");
  }
}

/// Reads a config over the defaults of its environment and mode. Every key
/// is optional; unknown keys are rejected with the offending field name.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, to_json(ExperimentConfig{}), "");
  EnvKind env = EnvKind::Cartpole;
  if (auto it = j.find("env"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::ConfigError, "env: wrong type");
    env = env_kind_from_string(it->get<std::string>());
  }
  train::Mode mode = train::Mode::Reil;
  if (auto a = j.find("algorithm"); a != j.end() && a->is_object() && a->contains("mode")) {
    if (!(*a)["mode"].is_string()) throw Error(ErrorCode::ConfigError, "mode: wrong type");
    mode = train::mode_from_string((*a)["mode"].get<std::string>());
  }
  ExperimentConfig c = default_experiment(env, mode);
  if (auto a = j.find("algorithm"); a != j.end()) {
    c.algorithm = train::algorithm_config_from_json(*a, c.algorithm);
  }
  c.reward = default_reward(env, mode, c.algorithm.gamma);
  if (auto r = j.find("reward"); r != j.end()) {
    detail::reject_unknown(*r, {{"r_int", 0}, {"gamma", 0}, {"task_reward_kind", 0}, {"r_task_min", 0}}, "reward.");
    if (auto k = r->find("task_reward_kind"); k != r->end()) {
      if (!k->is_string()) throw Error(ErrorCode::ConfigError, "reward.task_reward_kind: wrong type");
      c.reward.task_reward_kind = task_reward_kind_from_string(k->get<std::string>());
    }
    detail::read(*r, "r_int", c.reward.r_int, "reward.");
    detail::read(*r, "gamma", c.reward.gamma, "reward.");
    detail::read(*r, "r_task_min", c.reward.r_task_min, "reward.");
  }
  detail::read(j, "episodes", c.episodes);
  detail::read(j, "runs", c.runs);
  detail::read(j, "out_dir", c.out_dir);
  detail::read(j, "live", c.live);
  detail::read(j, "port", c.port);
  detail::read(j, "live_rate_hz", c.live_rate_hz);
  if (auto m = j.find("model"); m != j.end()) {
    detail::reject_unknown(*m, to_json(ExperimentConfig{})["model"], "model.");
    if (auto k = m->find("kind"); k != m->end()) {
      const auto s = k->is_string() ? k->get<std::string>() : std::string();
      if (s == "MLP") {
        c.model.kind = nn::ModelKind::Mlp;
      } else if (s == "SNAIL") {
        c.model.kind = nn::ModelKind::Snail;
      } else {
        throw Error(ErrorCode::ConfigError, "model.kind: expected MLP or SNAIL");
      }
    }
    detail::read(*m, "hidden", c.model.hidden, "model.");
    detail::read(*m, "latent_dim", c.model.latent_dim, "model.");
    detail::read(*m, "tc_filters", c.model.tc_filters, "model.");
    detail::read(*m, "attn_key_dim", c.model.attn_key_dim, "model.");
    detail::read(*m, "attn_value_dim", c.model.attn_value_dim, "model.");
    detail::read(*m, "seq_len", c.model.seq_len, "model.");
    detail::read(*m, "with_tf_head", c.model.with_tf_head, "model.");
  }
  if (auto g = j.find("gate"); g != j.end()) {
    detail::reject_unknown(*g, {{"handback_margin", 0}, {"handback_hold", 0}}, "gate.");
    detail::read(*g, "handback_margin", c.gate.handback_margin, "gate.");
    detail::read(*g, "handback_hold", c.gate.handback_hold, "gate.");
  }
  detail::read(j, "stop_on_success", c.stop_on_success);
  detail::read(j, "max_env_steps", c.max_env_steps);
  detail::read(j, "memory_capacity", c.memory_capacity);
  detail::read(j, "cartpole_success_steps", c.cartpole_success_steps);
  detail::read(j, "time_limit", c.time_limit);
  detail::read(j, "scenes", c.scenes);
  detail::read(j, "offline", c.offline);
  detail::read(j, "dataset", c.dataset);
  detail::read(j, "offline_epochs", c.offline_epochs);
  detail::read(j, "eval_episodes", c.eval_episodes);
  validate(c);
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(nn::read_json_file(path));
}

inline std::unique_ptr<envs::Environment> make_environment(const ExperimentConfig& c) {
  if (c.env == EnvKind::Cartpole) {
    envs::CartpoleConfig ec;
    ec.success_steps = c.cartpole_success_steps;
    if (c.time_limit > 0) ec.time_limit = c.time_limit;
    return std::make_unique<envs::Cartpole>(ec);
  }
  envs::NavsimConfig nc;
  if (c.time_limit > 0) nc.time_limit = c.time_limit;
  auto env = std::make_unique<envs::Navsim>(nc);
  if (!c.scenes.empty()) {
    std::vector<envs::NavScene> scenes;
    for (const auto& p : c.scenes) scenes.push_back(envs::load_scene(p));
    env->set_scenes(std::move(scenes));
  }
  return env;
}

inline nn::ModelSpec make_model_spec(const ExperimentConfig& c, const envs::Environment& env) {
  nn::ModelSpec spec;
  spec.kind = c.model.kind;
  spec.obs_dim = static_cast<Eigen::Index>(env.obs_dim());
  spec.box = env.action_box();
  spec.hidden = c.model.hidden;
  spec.with_tf_head = c.model.with_tf_head;
  spec.snail.obs_dim = spec.obs_dim;
  spec.snail.latent_dim = c.model.latent_dim;
  spec.snail.tc_filters = c.model.tc_filters;
  spec.snail.attn_key_dim = c.model.attn_key_dim;
  spec.snail.attn_value_dim = c.model.attn_value_dim;
  spec.snail.seq_len = c.model.seq_len;
  spec.snail.action_dim = spec.action_dim();
  spec.snail.with_tf_head = c.model.with_tf_head;
  return spec;
}

/// Seed of run i.
inline std::uint64_t run_seed(std::uint64_t base, int run) { return base + static_cast<std::uint64_t>(run) * 10007ULL; }

struct RunArtifacts {
  std::string metrics_csv;
  std::string dataset_jsonl;
  std::string checkpoint_json;
};

inline RunArtifacts run_paths(const std::string& out_dir, int run) {
  const auto dir = std::filesystem::path(out_dir) / ("run_" + std::to_string(run));
  return {(dir / "metrics.csv").string(), (dir / "dataset.jsonl").string(), (dir / "checkpoint.json").string()};
}

/// Checkpoint file: the experiment config (for rebuilding models and the
/// environment) plus every network.
template <class T>
void save_checkpoint(const std::string& path, const ExperimentConfig& cfg, const train::TrainState<T>& s) {
  nn::write_json_file(path, {{"experiment", to_json(cfg)}, {"state", train::train_state_to_json(s, cfg.algorithm.seed)}});
}

struct LoadedCheckpoint {
  ExperimentConfig config;
  std::unique_ptr<envs::Environment> env;
  train::TrainState<float> state;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  const auto j = nn::read_json_file(path);
  if (!j.contains("experiment") || !j.contains("state")) {
    throw Error(ErrorCode::ParseError, path + ": not a training checkpoint");
  }
  LoadedCheckpoint c;
  c.config = experiment_config_from_json(j["experiment"]);
  c.env = make_environment(c.config);
  c.state = train::make_train_state<float>(make_model_spec(c.config, *c.env), c.config.algorithm);
  train::restore_train_state(c.state, j["state"]);
  return c;
}

struct ExperimentResult {
  std::vector<MetricsLog> runs;
};

/// Executes `runs` independent runs and writes per-run metrics, dataset and
/// checkpoint under out_dir/run_<i>/. Headless runs are bit-reproducible.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::function<void(int, const train::EpisodeReport&)>& progress = {}) {
  validate(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  nn::write_json_file((std::filesystem::path(cfg.out_dir) / "config.json").string(), to_json(cfg));
  ExperimentResult result;
  for (int run = 0; run < cfg.runs; ++run) {
    ExperimentConfig rc = cfg;
    rc.algorithm.seed = run_seed(cfg.algorithm.seed, run);
    auto env = make_environment(rc);
    auto state = train::make_train_state<float>(make_model_spec(rc, *env), rc.algorithm);
    const auto paths = run_paths(cfg.out_dir, run);
    std::filesystem::create_directories(std::filesystem::path(paths.metrics_csv).parent_path());
    MetricsLog log;
    if (rc.offline) {
      const auto data = load_dataset(rc.dataset, std::max<std::size_t>(rc.memory_capacity, 1), rc.algorithm.seed);
      train::train_offline(data, state, rc.algorithm, rc.offline_epochs);
      log = train::evaluate(*env, state, rc.algorithm, rc.reward, rc.eval_episodes, rc.algorithm.seed, rc.gate);
      save_dataset(data, paths.dataset_jsonl);
    } else {
      ReplayMemory memory(rc.memory_capacity, rc.algorithm.seed);
      train::OnlineOptions opt;
      opt.episodes = rc.episodes;
      opt.stop_on_success = rc.stop_on_success;
      opt.max_env_steps = rc.max_env_steps;
      opt.env_seed = rc.algorithm.seed;
      opt.gate = rc.gate;
      if (progress) opt.on_episode = [&](const train::EpisodeReport& r) { progress(run, r); };
      log = train::train_online(*env, state, memory, rc.algorithm, rc.reward, opt);
      save_dataset(memory, paths.dataset_jsonl);
    }
    save_metrics_csv(log, paths.metrics_csv);
    save_checkpoint(paths.checkpoint_json, rc, state);
    result.runs.push_back(std::move(log));
  }
  return result;
}

/// Metrics logs of every run_<i> directory under `dir`, in run order.
inline std::vector<MetricsLog> load_run_metrics(const std::string& dir) {
  std::vector<MetricsLog> logs;
  for (int run = 0;; ++run) {
    const auto p = run_paths(dir, run).metrics_csv;
    if (!std::filesystem::exists(p)) break;
    logs.push_back(load_metrics_csv(p));
  }
  if (logs.empty()) throw Error(ErrorCode::IoError, "no run_<i>/metrics.csv under " + dir);
  return logs;
}

}  // namespace reil::harness
