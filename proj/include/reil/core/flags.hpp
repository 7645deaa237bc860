#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "reil/core/reward.hpp"
#include "reil/core/types.hpp"
#include "reil/error.hpp"

namespace reil {

struct FlagOptions {
  // IARL-style training never cuts bootstrapping at an intervention onset.
  bool intervention_terminates = true;
};

/// Flags for step t given f_demo at t and t+1 (next = 0 past the end).
inline GatingFlags gating_flags_for(std::uint8_t f_demo, std::uint8_t next_f_demo, bool env_terminal,
                                    FlagOptions options = {}) {
  GatingFlags flags;
  if (options.intervention_terminates) {
    flags.intervention = static_cast<std::uint8_t>(std::max(int(next_f_demo) - int(f_demo), 0));
  }
  flags.task = env_terminal ? 1 : 0;
  flags.mix = std::max(flags.intervention, flags.task);
  return flags;
}

inline Episode compute_gating_flags(Episode episode, FlagOptions options = {}) {
  if (episode.empty()) throw Error(ErrorCode::EmptyEpisode, "cannot flag an empty episode");
  auto& ts = episode.transitions;
  for (std::size_t t = 0; t < ts.size(); ++t) {
    const std::uint8_t next = t + 1 < ts.size() ? ts[t + 1].f_demo : 0;
    ts[t].flags = gating_flags_for(ts[t].f_demo, next, ts[t].env_terminal, options);
  }
  return episode;
}

/// Fills flags and gated rewards for a whole episode.
inline Episode finalize_episode(Episode episode, const RewardSpec& spec) {
  episode = compute_gating_flags(std::move(episode), {spec.intervention_terminates()});
  episode.transitions.back().terminal_kind = episode.terminal_kind;
  for (std::size_t t = 0; t < episode.size(); ++t) {
    episode.transitions[t].reward = compute_reward(t, episode, spec);
  }
  return episode;
}

/// Streaming variant of finalize_episode: a transition is finalized as soon
/// as its successor's ownership flag is known, so training can consume it
/// while the episode is still running.
class EpisodeBuilder {
 public:
  EpisodeBuilder(std::int64_t episode_id, RewardSpec spec) : episode_id_(episode_id), spec_(spec) {}

  /// Appends a raw step; returns the previous step once it is finalized.
  std::optional<Transition> append(Transition raw) {
    raw.episode_id = episode_id_;
    raw.step_index = static_cast<std::int64_t>(episode_.transitions.size());
    raw.flags.reset();
    std::optional<Transition> done;
    if (!episode_.transitions.empty()) {
      finalize(episode_.transitions.size() - 1, raw.f_demo, false);
      done = episode_.transitions.back();
    }
    episode_.transitions.push_back(std::move(raw));
    return done;
  }

  /// Closes the episode. The last step is treated as environment-terminal.
  /// A time-limit cut while the supervisor holds control is recorded as
  /// INTERVENTION_ONGOING_AT_END.
  Transition finish(TerminalKind kind) {
    if (episode_.transitions.empty()) throw Error(ErrorCode::EmptyEpisode, "finish on empty episode");
    auto& last = episode_.transitions.back();
    last.env_terminal = true;
    if (last.f_demo == 1 && kind == TerminalKind::TimeLimit) kind = TerminalKind::InterventionOngoingAtEnd;
    episode_.terminal_kind = kind;
    last.terminal_kind = kind;
    finalize(episode_.transitions.size() - 1, 0, kind == TerminalKind::TaskSuccess);
    return last;
  }

  const Episode& episode() const { return episode_; }
  Episode take() { return std::move(episode_); }
  std::size_t size() const { return episode_.transitions.size(); }

 private:
  void finalize(std::size_t t, std::uint8_t next_f_demo, bool success_step) {
    auto& tr = episode_.transitions[t];
    tr.flags = gating_flags_for(tr.f_demo, next_f_demo, tr.env_terminal, {spec_.intervention_terminates()});
    tr.reward = gated_reward(spec_, tr, success_step);
  }

  std::int64_t episode_id_;
  RewardSpec spec_;
  Episode episode_;
};

}  // namespace reil
