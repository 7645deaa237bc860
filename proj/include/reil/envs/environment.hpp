#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "reil/core/action_box.hpp"
#include "reil/core/types.hpp"

namespace reil::envs {

struct StepOutcome {
  bool terminal = false;
  TerminalKind kind = TerminalKind::TimeLimit;
};

/// Hand-back hysteresis of the scripted gate: the supervisor keeps control
/// until the state has stayed in the inner region for `handback_hold` steps.
struct SupervisorGate {
  double handback_margin = 0.5;  // inner region as a fraction of each threshold
  int handback_hold = 5;
};

/// A simulated task with a scripted supervisor and an acceptable set.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual const ActionBox& action_box() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual std::vector<double> observe() const = 0;
  virtual std::vector<double> supervisor_action() const = 0;
  /// Whether (current state, proposed action) is acceptable to the supervisor.
  virtual bool acceptable(const std::vector<double>& action) const = 0;
  virtual bool in_handback_region(double margin) const = 0;
  /// Executes an action. `supervised` marks supervisor-owned steps, which
  /// some success conditions exclude.
  virtual StepOutcome step(const std::vector<double>& action, bool supervised) = 0;
  virtual std::int64_t step_count() const = 0;
  /// Supervisor's task-termination label for the step just executed.
  virtual std::uint8_t task_done_label() const { return 0; }
  /// Component used by the smoothness metric (turn rate or force).
  virtual double angular_command(const std::vector<double>& action) const = 0;
  virtual nlohmann::json state_json() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

}  // namespace reil::envs
