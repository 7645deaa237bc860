#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "reil/error.hpp"

namespace reil {

/// How an episode ended. Recorded on the final transition only.
enum class TerminalKind { TaskSuccess, TaskFailure, TimeLimit, InterventionOngoingAtEnd };

inline std::string_view to_string(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::TaskSuccess: return "TASK_SUCCESS";
    case TerminalKind::TaskFailure: return "TASK_FAILURE";
    case TerminalKind::TimeLimit: return "TIME_LIMIT";
    case TerminalKind::InterventionOngoingAtEnd: return "INTERVENTION_ONGOING_AT_END";
  }
  return "TIME_LIMIT";
}

inline TerminalKind terminal_kind_from_string(std::string_view s) {
  if (s == "TASK_SUCCESS") return TerminalKind::TaskSuccess;
  if (s == "TASK_FAILURE") return TerminalKind::TaskFailure;
  if (s == "TIME_LIMIT") return TerminalKind::TimeLimit;
  if (s == "INTERVENTION_ONGOING_AT_END") return TerminalKind::InterventionOngoingAtEnd;
  throw Error(ErrorCode::ParseError, "unknown terminal kind '" + std::string(s) + "'");
}

/// Bootstrapping gates. `mix` is always max(intervention, task).
struct GatingFlags {
  std::uint8_t intervention = 0;
  std::uint8_t task = 0;
  std::uint8_t mix = 0;

  friend bool operator==(const GatingFlags&, const GatingFlags&) = default;
};

/// One timestep of an intervention-based rollout.
struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  std::uint8_t f_demo = 0;
  std::uint8_t f_tf_s = 0;
  double reward = 0.0;
  std::optional<GatingFlags> flags;
  // Environment reported an episode end at this step. Becomes flags->task.
  bool env_terminal = false;
  std::int64_t episode_id = 0;
  std::int64_t step_index = 0;
  // Set on the final transition of a closed episode.
  std::optional<TerminalKind> terminal_kind;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct Episode {
  std::vector<Transition> transitions;
  TerminalKind terminal_kind = TerminalKind::TimeLimit;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }

  std::size_t supervised_steps() const {
    std::size_t n = 0;
    for (const auto& t : transitions) n += t.f_demo;
    return n;
  }

  friend bool operator==(const Episode&, const Episode&) = default;
};

}  // namespace reil
