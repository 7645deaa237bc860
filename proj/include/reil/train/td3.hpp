#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "reil/core/replay_memory.hpp"
#include "reil/nn/models.hpp"
#include "reil/nn/optimizer.hpp"
#include "reil/train/config.hpp"

namespace reil::train {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using nn::Vector;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Online networks, their targets and optimizer state.
template <class T>
struct TrainState {
  std::shared_ptr<const nn::ActorModel<T>> actor_model;
  std::shared_ptr<const nn::CriticModel<T>> critic_model;
  Vector<T> actor, critic_1, critic_2;
  Vector<T> target_actor, target_critic_1, target_critic_2;
  nn::Optimizer<T> actor_opt, critic_1_opt, critic_2_opt;
  std::int64_t update_counter = 0;
  std::int64_t actor_steps = 0;
  std::mt19937_64 rng;

  const nn::ModelSpec& spec() const { return actor_model->spec(); }
  const ActionBox& box() const { return actor_model->spec().box; }
};

template <class T>
TrainState<T> make_train_state(const nn::ModelSpec& spec, const AlgorithmConfig& cfg) {
  cfg.validate();
  TrainState<T> s;
  s.actor_model = nn::make_actor<T>(spec);
  s.critic_model = nn::make_critic<T>(spec);
  s.actor = s.actor_model->init(splitmix64(cfg.seed * 4 + 1));
  s.critic_1 = s.critic_model->init(splitmix64(cfg.seed * 4 + 2));
  s.critic_2 = s.critic_model->init(splitmix64(cfg.seed * 4 + 3));
  s.target_actor = s.actor;
  s.target_critic_1 = s.critic_1;
  s.target_critic_2 = s.critic_2;
  s.actor_opt = nn::Optimizer<T>({cfg.optimizer, cfg.lr_actor, cfg.weight_decay_actor});
  s.critic_1_opt = nn::Optimizer<T>({cfg.optimizer, cfg.lr_critic, 0.0});
  s.critic_2_opt = nn::Optimizer<T>({cfg.optimizer, cfg.lr_critic, 0.0});
  s.rng.seed(splitmix64(cfg.seed * 4 + 4));
  return s;
}

/// Rows for one loss evaluation.
///
/// Flat batches hold independent samples and carry successor observations
/// explicitly. Sequence batches hold one causal sequence: `context` leading
/// rows (a demonstration prefix) followed by one episode, where the successor
/// of a row is simply the next row.
template <class T>
struct Batch {
  bool sequential = false;
  nn::ModelInput<T> input;
  Eigen::Index context = 0;
  Matrix<T> action;  // one row per input row
  Vector<T> reward;  // per loss row
  Vector<T> mix;
  Vector<T> f_demo;
  Vector<T> f_tf;  // empty when labels are unavailable
  Matrix<T> next_obs;
  std::vector<std::uint8_t> has_next;

  Eigen::Index rows() const { return reward.size(); }
};

namespace detail {
template <class T>
void fill_row(Matrix<T>& m, Eigen::Index r, const std::vector<double>& v) {
  if (static_cast<Eigen::Index>(v.size()) != m.cols()) throw Error(ErrorCode::ShapeError, "row width mismatch");
  for (std::size_t c = 0; c < v.size(); ++c) m(r, Eigen::Index(c)) = static_cast<T>(v[c]);
}

template <class T>
void fill_targets(Batch<T>& b, Eigen::Index r, const Transition& t) {
  if (!t.flags) throw Error(ErrorCode::FlagsUnset, "batch row without flags");
  b.reward[r] = static_cast<T>(t.reward);
  b.mix[r] = static_cast<T>(t.flags->mix);
  b.f_demo[r] = static_cast<T>(t.f_demo);
  b.f_tf[r] = static_cast<T>(t.f_tf_s);
}
}  // namespace detail

template <class T>
Batch<T> make_flat_batch(const std::vector<SampledTransition>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n == 0) throw Error(ErrorCode::EmptyBatch, "empty mini-batch");
  const auto d = static_cast<Eigen::Index>(samples[0].transition.obs.size());
  const auto a = static_cast<Eigen::Index>(samples[0].transition.action.size());
  Batch<T> b;
  b.input.obs.resize(n, d);
  b.input.prev_flag = Matrix<T>::Zero(n, 1);
  b.action.resize(n, a);
  b.reward.resize(n);
  b.mix.resize(n);
  b.f_demo.resize(n);
  b.f_tf.resize(n);
  b.next_obs = Matrix<T>::Zero(n, d);
  b.has_next.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = samples[static_cast<std::size_t>(r)];
    detail::fill_row(b.input.obs, r, s.transition.obs);
    detail::fill_row(b.action, r, s.transition.action);
    detail::fill_targets(b, r, s.transition);
    if (s.successor) {
      detail::fill_row(b.next_obs, r, s.successor->obs);
      b.has_next[static_cast<std::size_t>(r)] = 1;
    }
  }
  return b;
}

/// One episode as a causal sequence, optionally preceded by demonstration
/// rows (obs, action) used only as context.
template <class T>
Batch<T> make_sequence_batch(std::span<const Transition> episode,
                             const std::vector<std::pair<std::vector<double>, std::vector<double>>>& demo = {}) {
  if (episode.empty()) throw Error(ErrorCode::EmptyBatch, "empty episode");
  std::vector<std::vector<double>> demo_obs, exp_obs;
  std::vector<std::uint8_t> f;
  for (const auto& [o, a] : demo) demo_obs.push_back(o);
  for (const auto& t : episode) {
    exp_obs.push_back(t.obs);
    f.push_back(t.f_demo);
  }
  Batch<T> b;
  b.sequential = true;
  b.input = nn::make_sequence_input<T>(demo_obs, exp_obs, f);
  b.context = static_cast<Eigen::Index>(demo.size());
  const auto n = static_cast<Eigen::Index>(episode.size());
  const auto a = static_cast<Eigen::Index>(episode[0].action.size());
  b.action.resize(b.context + n, a);
  for (Eigen::Index r = 0; r < b.context; ++r) detail::fill_row(b.action, r, demo[std::size_t(r)].second);
  b.reward.resize(n);
  b.mix.resize(n);
  b.f_demo.resize(n);
  b.f_tf.resize(n);
  b.has_next.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& t = episode[std::size_t(r)];
    detail::fill_row(b.action, b.context + r, t.action);
    detail::fill_targets(b, r, t);
    b.has_next[std::size_t(r)] = r + 1 < n ? 1 : 0;
  }
  return b;
}

namespace detail {
// Target-policy smoothing: clipped Gaussian noise scaled by the box half-widths.
template <class T>
void smooth_actions(Matrix<T>& actions, const ActionBox& box, const AlgorithmConfig& cfg, std::mt19937_64& rng) {
  for (Eigen::Index r = 0; r < actions.rows(); ++r) {
    for (Eigen::Index c = 0; c < actions.cols(); ++c) {
      const double half = box.half_range(std::size_t(c));
      double v = static_cast<double>(actions(r, c));
      if (cfg.target_noise_sigma > 0.0) {
        const double eps = std::normal_distribution<double>(0.0, cfg.target_noise_sigma * half)(rng);
        const double lim = cfg.target_noise_clip * half;
        v += std::clamp(eps, -lim, lim);
      }
      actions(r, c) = static_cast<T>(std::clamp(v, box.low[std::size_t(c)], box.high[std::size_t(c)]));
    }
  }
}

template <class T>
Matrix<T> gather_rows(const Matrix<T>& m, const std::vector<Eigen::Index>& idx) {
  Matrix<T> out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = m.row(idx[i]);
  return out;
}

inline void require_rows(Eigen::Index n) {
  if (n == 0) throw Error(ErrorCode::EmptyBatch, "empty mini-batch");
}
}  // namespace detail

/// y = R + gamma (1 - mix) min(Q'_1, Q'_2)(s', pi'(s') + eps).
/// Rows with mix = 1 never touch a network.
template <class T>
Vector<T> critic_target(const Batch<T>& b, TrainState<T>& s, const AlgorithmConfig& cfg) {
  Vector<T> y = b.reward;
  std::vector<Eigen::Index> open;
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    if (b.mix[r] != T(0)) continue;
    if (!b.has_next[std::size_t(r)]) {
      throw Error(ErrorCode::DanglingSuccessor, "row " + std::to_string(r) + " bootstraps without a successor");
    }
    open.push_back(r);
  }
  if (open.empty()) return y;
  const T gamma = static_cast<T>(cfg.gamma);
  Tape<T> tape;
  if (!b.sequential) {
    nn::ModelInput<T> next;
    next.obs = detail::gather_rows(b.next_obs, open);
    next.prev_flag = Matrix<T>::Zero(next.obs.rows(), 1);
    Matrix<T> a = tape.value(s.actor_model->forward(tape, s.target_actor, next).action);
    detail::smooth_actions(a, s.box(), cfg, s.rng);
    Var av = tape.constant(a);
    const auto& q1 = tape.value(s.critic_model->forward(tape, s.target_critic_1, next, av));
    const auto& q2 = tape.value(s.critic_model->forward(tape, s.target_critic_2, next, av));
    for (std::size_t i = 0; i < open.size(); ++i) {
      y[open[i]] += gamma * std::min(q1(Eigen::Index(i), 0), q2(Eigen::Index(i), 0));
    }
    return y;
  }
  Matrix<T> a = tape.value(s.actor_model->forward(tape, s.target_actor, b.input).action);
  detail::smooth_actions(a, s.box(), cfg, s.rng);
  Var av = tape.constant(a);
  const auto& q1 = tape.value(s.critic_model->forward(tape, s.target_critic_1, b.input, av));
  const auto& q2 = tape.value(s.critic_model->forward(tape, s.target_critic_2, b.input, av));
  for (Eigen::Index r : open) {
    const Eigen::Index nxt = b.context + r + 1;
    y[r] += gamma * std::min(q1(nxt, 0), q2(nxt, 0));
  }
  return y;
}

/// Mean squared TD error of both critics (summed) before the step, after
/// which each critic takes one optimizer step. Advances update_counter.
template <class T>
T critic_update(std::span<const Batch<T>> batches, TrainState<T>& s, const AlgorithmConfig& cfg) {
  Eigen::Index total = 0;
  for (const auto& b : batches) total += b.rows();
  detail::require_rows(total);
  std::vector<Vector<T>> targets;
  for (const auto& b : batches) targets.push_back(critic_target(b, s, cfg));
  T loss_sum = 0;
  auto step = [&](Vector<T>& params, nn::Optimizer<T>& opt) {
    Tape<T> tape;
    Var loss;
    for (std::size_t k = 0; k < batches.size(); ++k) {
      const auto& b = batches[k];
      if (b.rows() == 0) continue;
      Var q = s.critic_model->forward(tape, params, b.input, tape.constant(b.action));
      q = nn::slice_rows(tape, q, b.context, b.rows());
      Var err = nn::add_constant(tape, q, Matrix<T>(-targets[k]));
      Var part = nn::sum(tape, nn::square(tape, err));
      loss = loss.valid() ? nn::add(tape, loss, part) : part;
    }
    loss = nn::scale(tape, loss, T(1) / static_cast<T>(total));
    tape.backward(loss);
    loss_sum += tape.scalar(loss);
    opt.step(params, tape.param_grads(params));
  };
  step(s.critic_1, s.critic_1_opt);
  step(s.critic_2, s.critic_2_opt);
  ++s.update_counter;
  return loss_sum;
}

template <class T>
T critic_update(const Batch<T>& b, TrainState<T>& s, const AlgorithmConfig& cfg) {
  return critic_update(std::span<const Batch<T>>(&b, 1), s, cfg);
}

/// Sum over loss rows of [alpha Q_1(s, pi(s)) - w(f) |pi(s) - a|^2], negated.
/// Distances are measured in box-normalized units. Adds the actor output to
/// `tf_out` when requested so the termination loss can reuse the pass.
template <class T>
Var actor_objective_sum(Tape<T>& tape, const Batch<T>& b, const TrainState<T>& s, const AlgorithmConfig& cfg,
                        Var* tf_out = nullptr) {
  const auto& box = s.box();
  const auto ad = static_cast<Eigen::Index>(box.dim());
  auto out = s.actor_model->forward(tape, s.actor, b.input);
  if (tf_out) *tf_out = out.tf.valid() ? nn::slice_rows(tape, out.tf, b.context, b.rows()) : Var{};
  Var pi = nn::slice_rows(tape, out.action, b.context, b.rows());

  Vector<T> w(b.rows());
  bool any_bc = false;
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    w[r] = static_cast<T>(cfg.bc_weight(b.f_demo[r] != T(0) ? 1 : 0));
    any_bc = any_bc || w[r] != T(0);
  }
  Var objective;
  if (any_bc) {
    Vector<T> inv_half(ad);
    for (Eigen::Index c = 0; c < ad; ++c) inv_half[c] = static_cast<T>(1.0 / box.half_range(std::size_t(c)));
    Var diff = nn::add_constant(tape, pi, Matrix<T>(-b.action.bottomRows(b.rows())));
    Var dist = nn::row_sum(tape, nn::square(tape, nn::scale_cols(tape, diff, inv_half)));
    objective = nn::scale(tape, nn::mul(tape, dist, tape.constant(Matrix<T>(w))), T(-1));
  }
  const double alpha = cfg.effective_alpha();
  if (alpha > 0.0) {
    Var q = s.critic_model->forward(tape, s.critic_1, b.input, out.action);
    q = nn::scale(tape, nn::slice_rows(tape, q, b.context, b.rows()), static_cast<T>(alpha));
    objective = objective.valid() ? nn::add(tape, objective, q) : q;
  }
  if (!objective.valid()) return tape.constant(Matrix<T>::Zero(1, 1));
  return nn::scale(tape, nn::sum(tape, objective), T(-1));
}

/// -sum [(1 - y) log(1 - p) + y log p] with p clamped to [1e-6, 1 - 1e-6].
template <class T>
Var termination_loss_sum(Tape<T>& tape, Var tf, const Vector<T>& labels) {
  if (labels.size() == 0) throw Error(ErrorCode::MissingTfLabels, "batch carries no termination labels");
  if (!tf.valid()) throw Error(ErrorCode::ConfigError, "actor has no termination head");
  if (tape.value(tf).rows() != labels.size()) throw Error(ErrorCode::ShapeError, "termination labels length");
  Var p = nn::clamp(tape, tf, T(1e-6), T(1 - 1e-6));
  Matrix<T> y = labels;
  Matrix<T> one_minus_y = (T(1) - y.array()).matrix();
  Var log_p = nn::log(tape, p);
  Var log_q = nn::log(tape, nn::add_constant(tape, nn::scale(tape, p, T(-1)), Matrix<T>::Ones(y.rows(), 1)));
  Var ll = nn::add(tape, nn::mul(tape, log_p, tape.constant(y)), nn::mul(tape, log_q, tape.constant(one_minus_y)));
  return nn::scale(tape, nn::sum(tape, ll), T(-1));
}

/// Mean-normalized actor objective over all loss rows.
template <class T>
T actor_loss(std::span<const Batch<T>> batches, const TrainState<T>& s, const AlgorithmConfig& cfg) {
  Eigen::Index total = 0;
  T sum = 0;
  for (const auto& b : batches) {
    if (b.rows() == 0) continue;
    Tape<T> tape;
    sum += tape.scalar(actor_objective_sum(tape, b, s, cfg));
    total += b.rows();
  }
  detail::require_rows(total);
  return sum / static_cast<T>(total);
}

template <class T>
T actor_loss(const Batch<T>& b, const TrainState<T>& s, const AlgorithmConfig& cfg) {
  return actor_loss(std::span<const Batch<T>>(&b, 1), s, cfg);
}

/// Summed cross-entropy of the termination head against f_tf_s.
template <class T>
T termination_loss(const Batch<T>& b, const TrainState<T>& s) {
  Tape<T> tape;
  auto out = s.actor_model->forward(tape, s.actor, b.input);
  Var tf = out.tf.valid() ? nn::slice_rows(tape, out.tf, b.context, b.rows()) : Var{};
  return tape.scalar(termination_loss_sum(tape, tf, b.f_tf));
}

/// Delayed actor step plus soft target updates. Runs only when
/// update_counter is a multiple of the actor period; returns whether it did.
template <class T>
bool actor_update(std::span<const Batch<T>> batches, TrainState<T>& s, const AlgorithmConfig& cfg) {
  if (s.update_counter % cfg.effective_actor_period() != 0) return false;
  Eigen::Index total = 0;
  for (const auto& b : batches) total += b.rows();
  detail::require_rows(total);
  const bool with_tf = s.actor_model->has_tf_head() && cfg.tf_loss_weight > 0.0;
  Tape<T> tape;
  Var loss;
  for (const auto& b : batches) {
    if (b.rows() == 0) continue;
    Var tf;
    Var part = actor_objective_sum(tape, b, s, cfg, &tf);
    if (with_tf) {
      part = nn::add(tape, part,
                     nn::scale(tape, termination_loss_sum(tape, tf, b.f_tf), static_cast<T>(cfg.tf_loss_weight)));
    }
    loss = loss.valid() ? nn::add(tape, loss, part) : part;
  }
  loss = nn::scale(tape, loss, T(1) / static_cast<T>(total));
  tape.backward(loss);
  s.actor_opt.step(s.actor, tape.param_grads(s.actor));
  ++s.actor_steps;
  nn::polyak_update(s.target_actor, s.actor, cfg.tau);
  nn::polyak_update(s.target_critic_1, s.critic_1, cfg.tau);
  nn::polyak_update(s.target_critic_2, s.critic_2, cfg.tau);
  return true;
}

template <class T>
bool actor_update(const Batch<T>& b, TrainState<T>& s, const AlgorithmConfig& cfg) {
  return actor_update(std::span<const Batch<T>>(&b, 1), s, cfg);
}

/// One full update: critics (when the mode reads them), then the delayed actor.
template <class T>
void train_step(std::span<const Batch<T>> batches, TrainState<T>& s, const AlgorithmConfig& cfg) {
  if (cfg.uses_critic()) {
    critic_update(batches, s, cfg);
  } else {
    ++s.update_counter;
  }
  actor_update(batches, s, cfg);
}

/// Samples a flat mini-batch under the mode's data restriction and updates.
template <class T>
void train_step(ReplayMemory& memory, TrainState<T>& s, const AlgorithmConfig& cfg) {
  auto samples = cfg.supervised_only() ? memory.sample_supervised(std::size_t(cfg.batch_size))
                                       : memory.sample(std::size_t(cfg.batch_size));
  const Batch<T> b = make_flat_batch<T>(samples);
  train_step(std::span<const Batch<T>>(&b, 1), s, cfg);
}

/// pi(s) at the last input row, plus clipped Gaussian exploration noise.
template <class T>
std::vector<double> select_action(const TrainState<T>& s, const nn::ModelInput<T>& input, bool explore,
                                  const AlgorithmConfig& cfg, std::mt19937_64& rng) {
  Tape<T> tape;
  auto out = s.actor_model->forward(tape, s.actor, input);
  const auto& a = tape.value(out.action);
  const auto& box = s.box();
  std::vector<double> action(box.dim());
  for (std::size_t c = 0; c < action.size(); ++c) {
    action[c] = static_cast<double>(a(a.rows() - 1, Eigen::Index(c)));
    if (explore && cfg.exploration_noise_sigma > 0.0) {
      action[c] += std::normal_distribution<double>(0.0, cfg.exploration_noise_sigma * box.half_range(c))(rng);
    }
  }
  return box.clip(action);
}

/// Termination probability at the last input row (0 without a head).
template <class T>
double termination_probability(const TrainState<T>& s, const nn::ModelInput<T>& input) {
  if (!s.actor_model->has_tf_head()) return 0.0;
  Tape<T> tape;
  auto out = s.actor_model->forward(tape, s.actor, input);
  const auto& f = tape.value(out.tf);
  return static_cast<double>(f(f.rows() - 1, 0));
}

}  // namespace reil::train
