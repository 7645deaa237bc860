#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "reil/error.hpp"
#include "reil/nn/optimizer.hpp"

namespace reil::train {

enum class Mode { Reil, OnlyRl, OnlyBc, HgDagger, Iarl };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Reil: return "REIL";
    case Mode::OnlyRl: return "ONLY_RL";
    case Mode::OnlyBc: return "ONLY_BC";
    case Mode::HgDagger: return "HG_DAGGER";
    case Mode::Iarl: return "IARL";
  }
  return "REIL";
}

inline Mode mode_from_string(std::string_view s) {
  if (s == "REIL") return Mode::Reil;
  if (s == "ONLY_RL") return Mode::OnlyRl;
  if (s == "ONLY_BC") return Mode::OnlyBc;
  if (s == "HG_DAGGER") return Mode::HgDagger;
  if (s == "IARL") return Mode::Iarl;
  throw Error(ErrorCode::ConfigError, "mode: unknown value '" + std::string(s) + "'");
}

/// Learning hyperparameters. Field names double as config-file keys.
///
/// Noise sigmas are relative to the half-width of the action box, so one value
/// fits action dimensions of different scale.
struct AlgorithmConfig {
  Mode mode = Mode::Reil;
  double alpha = 0.05;
  double beta = 0.1;
  double gamma = 0.99;
  int batch_size = 24;
  int updates_per_step = 50;   // online updates after every env step (0: per-episode epochs)
  int epochs_per_episode = 0;  // passes over memory after each episode
  double lr_actor = 1e-6;
  double lr_critic = 1e-4;
  double weight_decay_actor = 1e-4;
  double tau = 0.005;
  double target_noise_sigma = 0.2;
  double target_noise_clip = 0.5;
  int actor_update_period = 2;
  double exploration_noise_sigma = 0.1;
  std::uint64_t seed = 0;

  // Not part of the published tables.
  nn::OptimizerKind optimizer = nn::OptimizerKind::Sgd;
  double tf_loss_weight = 1.0;
  int batch_episodes = 4;  // sequence models: episodes per mini-batch

  /// Coefficient on the Q term after mode overrides.
  double effective_alpha() const {
    return (mode == Mode::OnlyBc || mode == Mode::HgDagger) ? 0.0 : alpha;
  }
  /// Behaviour-cloning weight on agent-generated rows after mode overrides.
  double effective_beta() const {
    return (mode == Mode::Iarl || mode == Mode::HgDagger) ? 0.0 : beta;
  }
  /// w(f) = f + beta (1 - f); zero everywhere without a BC term.
  double bc_weight(std::uint8_t f_demo) const {
    if (mode == Mode::OnlyRl) return 0.0;
    return f_demo ? 1.0 : effective_beta();
  }
  /// Critics are trained only when the actor objective reads them.
  bool uses_critic() const { return effective_alpha() > 0.0; }
  bool supervised_only() const { return mode == Mode::HgDagger; }
  int effective_actor_period() const { return uses_critic() ? actor_update_period : 1; }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw Error(ErrorCode::ConfigError, field + ": " + why);
    };
    if (!(alpha >= 0.0)) fail("alpha", "must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) fail("beta", "must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0,1)");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (updates_per_step < 0) fail("updates_per_step", "must be >= 0");
    if (epochs_per_episode < 0) fail("epochs_per_episode", "must be >= 0");
    if (!(lr_actor >= 0.0)) fail("lr_actor", "must be >= 0");
    if (!(lr_critic >= 0.0)) fail("lr_critic", "must be >= 0");
    if (!(weight_decay_actor >= 0.0)) fail("weight_decay_actor", "must be >= 0");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau", "must lie in (0,1]");
    if (!(target_noise_sigma >= 0.0)) fail("target_noise_sigma", "must be >= 0");
    if (!(target_noise_clip >= 0.0)) fail("target_noise_clip", "must be >= 0");
    if (actor_update_period < 1) fail("actor_update_period", "must be >= 1");
    if (!(exploration_noise_sigma >= 0.0)) fail("exploration_noise_sigma", "must be >= 0");
    if (!(tf_loss_weight >= 0.0)) fail("tf_loss_weight", "must be >= 0");
    if (batch_episodes < 1) fail("batch_episodes", "must be >= 1");
  }
};

inline nlohmann::json to_json(const AlgorithmConfig& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"batch_size", c.batch_size},
          {"updates_per_step", c.updates_per_step},
          {"epochs_per_episode", c.epochs_per_episode},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"weight_decay_actor", c.weight_decay_actor},
          {"tau", c.tau},
          {"target_noise_sigma", c.target_noise_sigma},
          {"target_noise_clip", c.target_noise_clip},
          {"actor_update_period", c.actor_update_period},
          {"exploration_noise_sigma", c.exploration_noise_sigma},
          {"seed", c.seed},
          {"optimizer", nn::to_string(c.optimizer)},
          {"tf_loss_weight", c.tf_loss_weight},
          {"batch_episodes", c.batch_episodes}};
}

namespace detail {
template <class V>
void read_field(const nlohmann::json& j, const char* key, V& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<V>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": wrong type");
  }
}
}  // namespace detail

/// Reads the keys present in `j` over `base`; unknown keys are rejected.
inline AlgorithmConfig algorithm_config_from_json(const nlohmann::json& j, AlgorithmConfig c = {}) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "algorithm: expected an object");
  const auto known = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw Error(ErrorCode::ConfigError, it.key() + ": unknown field");
  }
  if (auto it = j.find("mode"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::ConfigError, "mode: wrong type");
    c.mode = mode_from_string(it->get<std::string>());
  }
  if (auto it = j.find("optimizer"); it != j.end()) {
    if (!it->is_string()) throw Error(ErrorCode::ConfigError, "optimizer: wrong type");
    c.optimizer = nn::optimizer_kind_from_string(it->get<std::string>());
  }
  detail::read_field(j, "alpha", c.alpha);
  detail::read_field(j, "beta", c.beta);
  detail::read_field(j, "gamma", c.gamma);
  detail::read_field(j, "batch_size", c.batch_size);
  detail::read_field(j, "updates_per_step", c.updates_per_step);
  detail::read_field(j, "epochs_per_episode", c.epochs_per_episode);
  detail::read_field(j, "lr_actor", c.lr_actor);
  detail::read_field(j, "lr_critic", c.lr_critic);
  detail::read_field(j, "weight_decay_actor", c.weight_decay_actor);
  detail::read_field(j, "tau", c.tau);
  detail::read_field(j, "target_noise_sigma", c.target_noise_sigma);
  detail::read_field(j, "target_noise_clip", c.target_noise_clip);
  detail::read_field(j, "actor_update_period", c.actor_update_period);
  detail::read_field(j, "exploration_noise_sigma", c.exploration_noise_sigma);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "tf_loss_weight", c.tf_loss_weight);
  detail::read_field(j, "batch_episodes", c.batch_episodes);
  c.validate();
  return c;
}

/// Cartpole defaults (SGD, 50 updates per env step).
inline AlgorithmConfig cartpole_defaults(Mode mode = Mode::Reil) {
  AlgorithmConfig c;
  c.mode = mode;
  c.beta = mode == Mode::Iarl ? 0.0 : 0.1;
  return c;
}

/// Navigation defaults: 10 epochs per episode, Adam, no rollout noise.
inline AlgorithmConfig navsim_defaults(Mode mode = Mode::Reil) {
  AlgorithmConfig c;
  c.mode = mode;
  c.alpha = 0.2;
  c.beta = 0.1;
  c.gamma = 0.95;
  c.updates_per_step = 0;
  c.epochs_per_episode = 10;
  c.lr_actor = 2e-4;
  c.lr_critic = 5e-4;
  c.weight_decay_actor = 1e-3;
  c.exploration_noise_sigma = 0.0;
  c.optimizer = nn::OptimizerKind::Adam;
  return c;
}

}  // namespace reil::train
