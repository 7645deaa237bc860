#pragma once

#include <algorithm>
#include <random>
#include <span>

#include "reil/core/flags.hpp"
#include "reil/core/replay_memory.hpp"
#include "reil/train/td3.hpp"

namespace support {

struct ChainResult {
  double q0 = 0.0;        // converged critic at the first state
  double expected = 0.0;  // analytic truncated discounted sum
};

// Four agent steps through one-hot states, then the supervisor takes over
// at step 4: the last agent step is gated with r_int and the value at step
// 0 is 1 + g + g^2 + g^3 r_int.
inline ChainResult chain_mdp(double gamma = 0.9, double r_int = 0.5, int steps = 4000) {
  using namespace reil;
  using namespace reil::train;
  const RewardSpec reward(r_int, gamma, TaskRewardKind::ConstantOne, 1.0);
  AlgorithmConfig cfg;
  cfg.target_noise_sigma = 0.0;
  cfg.seed = 3;
  cfg.gamma = gamma;
  cfg.optimizer = nn::OptimizerKind::Adam;
  cfg.lr_critic = 3e-3;
  cfg.lr_actor = 0.0;
  cfg.tau = 0.05;
  nn::ModelSpec spec;
  spec.obs_dim = 4;
  spec.hidden = {32, 32};
  auto s = make_train_state<double>(spec, cfg);

  EpisodeBuilder builder(0, reward);
  ReplayMemory memory(100, 1);
  std::mt19937_64 unused;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> obs(4, 0.0);
    obs[std::size_t(std::min(t, 3))] = 1.0;
    if (t == 4) obs = {1, 1, 1, 1};
    Transition raw;
    nn::ModelInput<double> in;
    in.obs = Eigen::Map<const nn::Matrix<double>>(obs.data(), 1, 4);
    in.prev_flag = nn::Matrix<double>::Zero(1, 1);
    raw.obs = obs;
    raw.action = select_action(s, in, false, cfg, unused);
    raw.f_demo = t == 4 ? 1 : 0;
    if (auto done = builder.append(raw)) memory.push(*done);
  }
  memory.push(builder.finish(TerminalKind::TimeLimit));

  std::vector<SampledTransition> all;
  for (std::size_t i = 0; i < memory.size(); ++i) all.push_back(memory.sample_at(i));
  const auto b = make_flat_batch<double>(all);
  for (int k = 0; k < steps; ++k) train_step(std::span<const Batch<double>>(&b, 1), s, cfg);

  nn::Tape<double> tape;
  nn::ModelInput<double> in0;
  in0.obs = b.input.obs.topRows(1);
  in0.prev_flag = nn::Matrix<double>::Zero(1, 1);
  const auto q = tape.value(s.critic_model->forward(tape, s.critic_1, in0, tape.constant(b.action.topRows(1))));
  return {q(0, 0), 1.0 + gamma + gamma * gamma + gamma * gamma * gamma * r_int};
}

}  // namespace support
