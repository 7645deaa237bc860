#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "reil/core/replay_memory.hpp"
#include "reil/core/types.hpp"
#include "reil/error.hpp"

namespace reil {

// Line-delimited JSON, one transition per line. Reals are written with
// shortest round-trip formatting, so a reload is exact.

inline nlohmann::json transition_to_json(const Transition& t) {
  if (!t.flags) throw Error(ErrorCode::FlagsUnset, "cannot serialize an unflagged transition");
  nlohmann::json j;
  j["episode_id"] = t.episode_id;
  j["step_index"] = t.step_index;
  j["obs"] = t.obs;
  j["action"] = t.action;
  j["f_demo"] = t.f_demo;
  j["f_tf_s"] = t.f_tf_s;
  j["reward"] = t.reward;
  j["omega_int"] = t.flags->intervention;
  j["omega_task"] = t.flags->task;
  j["omega_mix"] = t.flags->mix;
  if (t.terminal_kind) j["terminal_kind"] = std::string(to_string(*t.terminal_kind));
  return j;
}

namespace detail {
inline std::uint8_t read_bit(const nlohmann::json& j, const char* key) {
  const int v = j.at(key).get<int>();
  if (v != 0 && v != 1) throw Error(ErrorCode::ParseError, std::string(key) + " must be 0 or 1");
  return static_cast<std::uint8_t>(v);
}
}  // namespace detail

inline Transition transition_from_json(const nlohmann::json& j) {
  Transition t;
  t.episode_id = j.at("episode_id").get<std::int64_t>();
  t.step_index = j.at("step_index").get<std::int64_t>();
  t.obs = j.at("obs").get<std::vector<double>>();
  t.action = j.at("action").get<std::vector<double>>();
  t.f_demo = detail::read_bit(j, "f_demo");
  t.f_tf_s = detail::read_bit(j, "f_tf_s");
  t.reward = j.at("reward").get<double>();
  GatingFlags flags{detail::read_bit(j, "omega_int"), detail::read_bit(j, "omega_task"),
                    detail::read_bit(j, "omega_mix")};
  if (flags.mix != std::max(flags.intervention, flags.task)) {
    throw Error(ErrorCode::ParseError, "omega_mix != max(omega_int, omega_task)");
  }
  t.flags = flags;
  t.env_terminal = flags.task == 1;
  if (auto it = j.find("terminal_kind"); it != j.end()) {
    t.terminal_kind = terminal_kind_from_string(it->get<std::string>());
  }
  return t;
}

inline void save_dataset(const ReplayMemory& memory, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  for (const auto& t : memory.transitions()) out << transition_to_json(t).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline ReplayMemory load_dataset(const std::string& path, std::size_t capacity = 1'000'000,
                                 std::uint64_t rng_seed = 0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<Transition> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      rows.push_back(transition_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  ReplayMemory memory(std::max(capacity, rows.size() == 0 ? std::size_t{1} : rows.size()), rng_seed);
  for (auto& t : rows) memory.push(std::move(t));
  return memory;
}

/// Regroups stored transitions into episodes along successor links.
inline std::vector<Episode> episodes_of(const ReplayMemory& memory) {
  std::vector<Episode> out;
  for (const auto& span : memory.episode_spans()) {
    Episode e;
    for (std::size_t i = span.begin; i < span.begin + span.length; ++i) e.transitions.push_back(memory[i]);
    if (e.transitions.back().terminal_kind) e.terminal_kind = *e.transitions.back().terminal_kind;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace reil
