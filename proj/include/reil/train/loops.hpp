#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "reil/core/flags.hpp"
#include "reil/envs/rollout.hpp"
#include "reil/harness/metrics.hpp"
#include "reil/nn/fp_mode.hpp"
#include "reil/train/td3.hpp"

namespace reil::train {

using Demo = std::vector<std::pair<std::vector<double>, std::vector<double>>>;

/// Observation context for the next action: the current observation for
/// flat models, the whole episode so far (after any demonstration) for
/// sequence models.
class Context {
 public:
  Context(bool sequential, const Demo* demo) : sequential_(sequential), demo_(demo) {}

  void clear() {
    obs_.clear();
    f_.clear();
  }
  void push(std::vector<double> obs) {
    obs_.push_back(std::move(obs));
    f_.push_back(0);
  }
  void set_last_flag(std::uint8_t f) { f_.back() = f; }

  template <class T>
  nn::ModelInput<T> input() const {
    if (sequential_) {
      std::vector<std::vector<double>> demo_obs;
      if (demo_) {
        for (const auto& [o, a] : *demo_) demo_obs.push_back(o);
      }
      return nn::make_sequence_input<T>(demo_obs, obs_, f_);
    }
    nn::ModelInput<T> in;
    const auto& o = obs_.back();
    in.obs.resize(1, static_cast<Eigen::Index>(o.size()));
    for (std::size_t c = 0; c < o.size(); ++c) in.obs(0, Eigen::Index(c)) = static_cast<T>(o[c]);
    in.prev_flag = Matrix<T>::Zero(1, 1);
    return in;
  }

 private:
  bool sequential_;
  const Demo* demo_;
  std::vector<std::vector<double>> obs_;
  std::vector<std::uint8_t> f_;
};

/// Per-episode summary that feeds the metrics log.
struct EpisodeReport {
  harness::MetricsRow row;
  Episode episode;
};

struct OnlineOptions {
  int episodes = 1;
  bool stop_on_success = false;
  std::int64_t max_env_steps = 0;  // 0: unlimited
  std::uint64_t env_seed = 0;
  envs::SupervisorGate gate;
  bool learn = true;     // false: act only (evaluation)
  bool explore = true;
  Demo demo;             // optional context prefix for sequence models
  std::function<void(const EpisodeReport&)> on_episode;
};

/// Seed of episode e's environment.
inline std::uint64_t episode_seed(std::uint64_t base, std::int64_t e) {
  return splitmix64(base * 1000003ULL + static_cast<std::uint64_t>(e));
}

/// All stored episodes as sequence batches.
template <class T>
std::vector<Batch<T>> sequence_batches(const ReplayMemory& memory, const Demo& demo = {}) {
  std::vector<Batch<T>> out;
  std::vector<Transition> buf;
  for (const auto& span : memory.episode_spans()) {
    buf.assign(memory.transitions().begin() + std::ptrdiff_t(span.begin),
               memory.transitions().begin() + std::ptrdiff_t(span.begin + span.length));
    out.push_back(make_sequence_batch<T>(std::span<const Transition>(buf), demo));
  }
  return out;
}

/// `epochs` shuffled passes over the memory. Flat models draw mini-batches
/// of batch_size transitions without replacement; sequence models draw
/// batch_episodes whole episodes per step.
template <class T>
void run_epochs(const ReplayMemory& memory, TrainState<T>& s, const AlgorithmConfig& cfg, int epochs,
                const Demo& demo = {}) {
  if (epochs <= 0 || memory.sampleable_count() == 0) return;
  nn::FlushToZeroScope ftz;
  if (s.spec().sequential()) {
    auto batches = sequence_batches<T>(memory, demo);
    if (cfg.supervised_only()) {
      std::erase_if(batches, [](const Batch<T>& b) { return b.f_demo.sum() == T(0); });
    }
    if (batches.empty()) return;
    std::vector<std::size_t> order(batches.size());
    for (int e = 0; e < epochs; ++e) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), s.rng);
      for (std::size_t i = 0; i < order.size(); i += std::size_t(cfg.batch_episodes)) {
        std::vector<Batch<T>> group;
        for (std::size_t k = i; k < std::min(order.size(), i + std::size_t(cfg.batch_episodes)); ++k) {
          group.push_back(batches[order[k]]);
        }
        train_step(std::span<const Batch<T>>(group), s, cfg);
      }
    }
    return;
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < memory.sampleable_count(); ++i) {
    if (!cfg.supervised_only() || memory[i].f_demo == 1) pool.push_back(i);
  }
  if (pool.empty()) return;
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(pool.begin(), pool.end(), s.rng);
    for (std::size_t i = 0; i < pool.size(); i += std::size_t(cfg.batch_size)) {
      std::vector<SampledTransition> samples;
      for (std::size_t k = i; k < std::min(pool.size(), i + std::size_t(cfg.batch_size)); ++k) {
        samples.push_back(memory.sample_at(pool[k]));
      }
      const Batch<T> b = make_flat_batch<T>(samples);
      train_step(std::span<const Batch<T>>(&b, 1), s, cfg);
    }
  }
}

namespace detail {
inline bool can_update(const ReplayMemory& memory, const AlgorithmConfig& cfg) {
  if (memory.sampleable_count() == 0) return false;
  if (!cfg.supervised_only()) return true;
  for (std::size_t i = memory.size(); i-- > 0;) {
    if (memory[i].f_demo == 1 && i < memory.sampleable_count()) return true;
  }
  return false;
}
}  // namespace detail

/// One executed step as seen by a driver of EpisodeRunner.
struct StepReport {
  std::int64_t step_index = 0;
  envs::Owner owner = envs::Owner::Agent;
  std::vector<double> agent_action;     // the actor's proposal
  std::vector<double> executed_action;
  std::uint8_t f_demo = 0;
  std::optional<TerminalKind> closed;   // set when this step ended the episode
};

/// Step-wise driver of intervention-based rollouts with interleaved
/// learning. After every environment step it performs updates_per_step
/// updates; after every episode it runs epochs_per_episode epochs.
/// Finalized transitions enter `memory` as soon as their successor's owner
/// is known.
template <class T>
class EpisodeRunner {
 public:
  EpisodeRunner(envs::Environment& env, TrainState<T>& s, ReplayMemory& memory, const AlgorithmConfig& cfg,
                const RewardSpec& reward, const OnlineOptions& opt)
      : env_(env),
        s_(s),
        memory_(memory),
        cfg_(cfg),
        reward_(reward),
        opt_(opt),
        explore_rng_(splitmix64(cfg.seed ^ 0x5eedULL)),
        context_(s.spec().sequential(), &opt_.demo),
        builder_(0, reward) {
    const auto& box = env.action_box();
    a_max_.assign(box.high.begin(), box.high.end());
  }

  void begin(std::int64_t e) {
    env_.reset(episode_seed(opt_.env_seed, e));
    context_.clear();
    builder_ = EpisodeBuilder(e, reward_);
    control_ = {};
    omegas_.clear();
    agent_actions_.clear();
    labels_.clear();
    human_agent_actions_.clear();
    human_labels_.clear();
    ret_ = 0.0;
    kind_.reset();
    episode_ = e;
    open_ = true;
  }

  bool open() const { return open_ && !kind_; }
  bool closed() const { return open_ && kind_.has_value(); }
  std::int64_t env_steps() const { return env_steps_; }
  bool budget_exhausted() const { return opt_.max_env_steps > 0 && env_steps_ >= opt_.max_env_steps; }
  const envs::Environment& env() const { return env_; }

  /// Executes one step. A human action overrides agent and gate; a label is
  /// stored for the error metric only and never executed.
  StepReport step(const std::optional<std::vector<double>>& human = std::nullopt,
                  const std::optional<std::vector<double>>& label = std::nullopt) {
    if (!open()) throw Error(ErrorCode::Protocol, "step outside an open episode");
    nn::FlushToZeroScope ftz;
    StepReport rep;
    rep.step_index = env_.step_count();
    context_.push(env_.observe());
    rep.agent_action = select_action(s_, context_.input<T>(), opt_.explore, cfg_, explore_rng_);
    omegas_.push_back(env_.angular_command(rep.agent_action));
    auto scripted = env_.supervisor_action();
    auto r = envs::rollout_step(env_, opt_.gate, control_, rep.agent_action, human);
    context_.set_last_flag(r.transition.f_demo);
    rep.owner = r.owner;
    rep.f_demo = r.transition.f_demo;
    rep.executed_action = r.transition.action;
    if (r.owner == envs::Owner::Agent) {
      agent_actions_.push_back(rep.agent_action);
      labels_.push_back(std::move(scripted));
      if (label) {
        human_agent_actions_.push_back(rep.agent_action);
        human_labels_.push_back(env_.action_box().clip(*label));
      }
    }
    ++env_steps_;
    if (auto done = builder_.append(std::move(r.transition))) store(*done);
    if (r.outcome.terminal) {
      close(r.outcome.kind);
    } else if (budget_exhausted()) {
      close(TerminalKind::TimeLimit);
    }
    rep.closed = kind_;
    if (opt_.learn && cfg_.updates_per_step > 0 && detail::can_update(memory_, cfg_)) {
      for (int u = 0; u < cfg_.updates_per_step; ++u) train_step(memory_, s_, cfg_);
    }
    return rep;
  }

  /// Closes the episode before the environment ends it.
  void close(TerminalKind kind) {
    if (!open()) return;
    kind_ = kind;
    if (!builder_.episode().empty()) store(builder_.finish(kind));
  }

  /// Runs the per-episode epochs and summarizes the closed episode.
  EpisodeReport end() {
    if (!closed()) throw Error(ErrorCode::Protocol, "end before the episode closed");
    if (opt_.learn) {
      nn::FlushToZeroScope ftz;
      run_epochs(memory_, s_, cfg_, cfg_.epochs_per_episode, opt_.demo);
    }
    open_ = false;
    EpisodeReport report;
    report.episode = builder_.take();
    auto& row = report.row;
    row.episode = episode_;
    row.steps = static_cast<std::int64_t>(report.episode.size());
    row.supervised_steps = static_cast<std::int64_t>(report.episode.supervised_steps());
    row.episode_return = ret_;
    row.avg_abs_angular_acc = omegas_.size() >= 2 ? harness::angular_acceleration_metric(omegas_) : 0.0;
    // Human labels replace the scripted ones whenever the episode has any.
    if (!human_labels_.empty()) {
      row.action_error = harness::action_error_metric(human_agent_actions_, human_labels_, a_max_);
    } else if (!agent_actions_.empty()) {
      row.action_error = harness::action_error_metric(agent_actions_, labels_, a_max_);
    }
    row.success = report.episode.terminal_kind == TerminalKind::TaskSuccess;
    return report;
  }

 private:
  void store(const Transition& t) {
    ret_ += t.reward;
    if (opt_.learn) memory_.push(t);
  }

  envs::Environment& env_;
  TrainState<T>& s_;
  ReplayMemory& memory_;
  const AlgorithmConfig& cfg_;
  RewardSpec reward_;
  OnlineOptions opt_;
  std::mt19937_64 explore_rng_;
  Context context_;
  EpisodeBuilder builder_;
  envs::ControlState control_;
  std::vector<double> a_max_;
  std::vector<double> omegas_;
  std::vector<std::vector<double>> agent_actions_, labels_;
  std::vector<std::vector<double>> human_agent_actions_, human_labels_;
  double ret_ = 0.0;
  std::optional<TerminalKind> kind_;
  std::int64_t episode_ = 0;
  std::int64_t env_steps_ = 0;
  bool open_ = false;
};

/// Headless intervention-based training: episodes until the count, the
/// step budget or (optionally) the first success.
template <class T>
harness::MetricsLog train_online(envs::Environment& env, TrainState<T>& s, ReplayMemory& memory,
                                 const AlgorithmConfig& cfg, const RewardSpec& reward, const OnlineOptions& opt) {
  harness::MetricsLog log;
  EpisodeRunner<T> runner(env, s, memory, cfg, reward, opt);
  for (int e = 0; e < opt.episodes; ++e) {
    runner.begin(e);
    while (runner.open()) runner.step();
    const auto report = runner.end();
    log.rows.push_back(report.row);
    if (opt.on_episode) opt.on_episode(report);
    if (opt.stop_on_success && report.row.success) break;
    if (runner.budget_exhausted()) break;
  }
  return log;
}

/// Deterministic rollouts of the current actor under the same gate.
template <class T>
harness::MetricsLog evaluate(envs::Environment& env, TrainState<T>& s, const AlgorithmConfig& cfg,
                             const RewardSpec& reward, int episodes, std::uint64_t env_seed,
                             const envs::SupervisorGate& gate = {}, const Demo& demo = {}) {
  ReplayMemory scratch(1);
  OnlineOptions opt;
  opt.episodes = episodes;
  opt.env_seed = env_seed;
  opt.gate = gate;
  opt.learn = false;
  opt.explore = false;
  opt.demo = demo;
  return train_online(env, s, scratch, cfg, reward, opt);
}

/// Learning from a fixed dataset only.
template <class T>
void train_offline(const ReplayMemory& dataset, TrainState<T>& s, const AlgorithmConfig& cfg, int epochs,
                   const Demo& demo = {}) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "offline training needs data");
  run_epochs(dataset, s, cfg, epochs, demo);
}

}  // namespace reil::train
