#pragma once

#include <optional>
#include <vector>

#include "reil/core/types.hpp"
#include "reil/envs/environment.hpp"

namespace reil::envs {

enum class Owner { Agent, Gate, Human };

inline const char* to_string(Owner o) {
  switch (o) {
    case Owner::Agent: return "AGENT";
    case Owner::Gate: return "GATE";
    case Owner::Human: return "HUMAN";
  }
  return "AGENT";
}

/// Who holds control between steps under the scripted gate.
struct ControlState {
  bool supervisor_owns = false;
  int inner_steps = 0;  // supervisor steps taken from inside the hand-back region
};

struct RolloutResult {
  Transition transition;  // unflagged; episode bookkeeping is the caller's
  Owner owner = Owner::Agent;
  bool gate_triggered = false;
  StepOutcome outcome;
};

/// Executes one step under the action-mixing rule.
///
/// The supervisor acts when it already owns control or when the proposed
/// (s, a) is unacceptable. It hands control back once it has acted
/// `handback_hold` consecutive times from inside the inner region. A human
/// action, when given, overrides both and is recorded as supervised.
inline RolloutResult rollout_step(Environment& env, const SupervisorGate& gate, ControlState& control,
                                  const std::vector<double>& agent_action,
                                  const std::optional<std::vector<double>>& human_action = std::nullopt) {
  RolloutResult r;
  r.transition.obs = env.observe();
  if (control.supervisor_owns && control.inner_steps >= gate.handback_hold) control = ControlState{};

  std::vector<double> action = agent_action;
  if (human_action) {
    r.owner = Owner::Human;
    action = env.action_box().clip(*human_action);
  } else if (control.supervisor_owns || !env.acceptable(agent_action)) {
    r.gate_triggered = !control.supervisor_owns;
    control.supervisor_owns = true;
    r.owner = Owner::Gate;
    action = env.supervisor_action();
  }
  const bool inner = env.in_handback_region(gate.handback_margin);
  r.outcome = env.step(action, r.owner != Owner::Agent);
  if (r.owner == Owner::Gate) control.inner_steps = inner ? control.inner_steps + 1 : 0;

  r.transition.action = std::move(action);
  r.transition.f_demo = r.owner == Owner::Agent ? 0 : 1;
  r.transition.f_tf_s = env.task_done_label();
  r.transition.env_terminal = r.outcome.terminal;
  return r;
}

}  // namespace reil::envs
