#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "reil/core/types.hpp"
#include "reil/error.hpp"

namespace reil {

enum class TaskRewardKind { ConstantOne, EpisodicUniversal, IarlVariant };

inline std::string_view to_string(TaskRewardKind kind) {
  switch (kind) {
    case TaskRewardKind::ConstantOne: return "CONSTANT_ONE";
    case TaskRewardKind::EpisodicUniversal: return "EPISODIC_UNIVERSAL";
    case TaskRewardKind::IarlVariant: return "IARL_VARIANT";
  }
  return "CONSTANT_ONE";
}

inline TaskRewardKind task_reward_kind_from_string(std::string_view s) {
  if (s == "CONSTANT_ONE") return TaskRewardKind::ConstantOne;
  if (s == "EPISODIC_UNIVERSAL") return TaskRewardKind::EpisodicUniversal;
  if (s == "IARL_VARIANT") return TaskRewardKind::IarlVariant;
  throw Error(ErrorCode::ConfigError, "task_reward_kind: unknown value '" + std::string(s) + "'");
}

enum class RIntCheck { Ok, Violation };

/// Intervention penalty must sit strictly below the value of an endless
/// stream of the smallest task reward: r_int < r_task_min / (1 - gamma).
inline RIntCheck validate_r_int(double r_int, double r_task_min, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::InvalidGamma, "gamma must lie in [0,1), got " + std::to_string(gamma));
  }
  return r_int < r_task_min / (1.0 - gamma) ? RIntCheck::Ok : RIntCheck::Violation;
}

struct RewardSpec {
  double r_int = 1.0;
  double gamma = 0.99;
  TaskRewardKind task_reward_kind = TaskRewardKind::ConstantOne;
  double r_task_min = 1.0;

  RewardSpec() = default;
  RewardSpec(double r_int_, double gamma_, TaskRewardKind kind, double r_task_min_)
      : r_int(r_int_), gamma(gamma_), task_reward_kind(kind), r_task_min(r_task_min_) {
    validate();
  }

  /// Cartpole: constant reward of one, r_int = 1.
  static RewardSpec constant_one(double gamma = 0.99) {
    return RewardSpec(1.0, gamma, TaskRewardKind::ConstantOne, 1.0);
  }
  /// Episodic tasks: 1 per step, 2/(1-gamma) on success, r_int = 0.
  static RewardSpec episodic_universal(double gamma = 0.95) {
    return RewardSpec(0.0, gamma, TaskRewardKind::EpisodicUniversal, 1.0);
  }
  static RewardSpec iarl(double gamma = 0.99) {
    return RewardSpec(0.0, gamma, TaskRewardKind::IarlVariant, 0.0);
  }

  void validate() const {
    if (task_reward_kind == TaskRewardKind::IarlVariant) {
      if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw Error(ErrorCode::InvalidGamma, "gamma must lie in [0,1)");
      }
      return;
    }
    if (validate_r_int(r_int, r_task_min, gamma) == RIntCheck::Violation) {
      throw Error(ErrorCode::ConfigError,
                  "r_int must be < r_task_min/(1-gamma) = " +
                      std::to_string(r_task_min / (1.0 - gamma)));
    }
  }

  /// Whether an intervention onset cuts value bootstrapping. IARL keeps
  /// bootstrapping through supervisor corrections.
  bool intervention_terminates() const { return task_reward_kind != TaskRewardKind::IarlVariant; }
};

/// R^task for one step. `success_step` marks the step at which the task was
/// completed (only meaningful for the episodic reward).
inline double task_reward(const RewardSpec& spec, bool success_step, std::uint8_t f_demo) {
  switch (spec.task_reward_kind) {
    case TaskRewardKind::ConstantOne: return 1.0;
    case TaskRewardKind::EpisodicUniversal: return success_step ? 2.0 / (1.0 - spec.gamma) : 1.0;
    case TaskRewardKind::IarlVariant: return 1.0 - static_cast<double>(f_demo);
  }
  return 1.0;
}

/// Gated reward for a transition whose flags are already set.
inline double gated_reward(const RewardSpec& spec, const Transition& t, bool success_step) {
  if (!t.flags) throw Error(ErrorCode::FlagsUnset, "step " + std::to_string(t.step_index));
  if (spec.task_reward_kind == TaskRewardKind::IarlVariant) return task_reward(spec, false, t.f_demo);
  const double omega_int = t.flags->intervention;
  return (1.0 - omega_int) * task_reward(spec, success_step, t.f_demo) + omega_int * spec.r_int;
}

inline double compute_reward(std::size_t t_index, const Episode& episode, const RewardSpec& spec) {
  if (t_index >= episode.size()) {
    throw Error(ErrorCode::ShapeError, "t_index " + std::to_string(t_index) + " out of range");
  }
  const bool success_step = t_index + 1 == episode.size() &&
                            episode.terminal_kind == TerminalKind::TaskSuccess;
  return gated_reward(spec, episode.transitions[t_index], success_step);
}

}  // namespace reil
