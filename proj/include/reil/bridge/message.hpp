#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reil/error.hpp"

namespace reil::bridge {

enum class MessageKind { Hello, State, Takeover, HumanAction, Release, Label, EpisodeEnd, Config, Error };

inline constexpr std::array<std::pair<MessageKind, std::string_view>, 9> kKindNames{{
    {MessageKind::Hello, "HELLO"},
    {MessageKind::State, "STATE"},
    {MessageKind::Takeover, "TAKEOVER"},
    {MessageKind::HumanAction, "HUMAN_ACTION"},
    {MessageKind::Release, "RELEASE"},
    {MessageKind::Label, "LABEL"},
    {MessageKind::EpisodeEnd, "EPISODE_END"},
    {MessageKind::Config, "CONFIG"},
    {MessageKind::Error, "ERROR"},
}};

inline std::string_view to_string(MessageKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "ERROR";
}

inline std::optional<MessageKind> kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

struct SessionMessage {
  MessageKind kind = MessageKind::Error;
  std::int64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const SessionMessage&, const SessionMessage&) = default;
};

/// One message per line: {"kind":...,"seq":...,"payload":{...}} and '\n'.
inline std::string to_line(const SessionMessage& m) {
  nlohmann::json j = {{"kind", std::string(to_string(m.kind))}, {"seq", m.seq}, {"payload", m.payload}};
  return j.dump() + "\n";
}

/// Parses one line. Throws Error(Protocol) naming the defect.
inline SessionMessage parse_message(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Protocol, "not valid JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::Protocol, "message must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "kind" && it.key() != "seq" && it.key() != "payload") {
      throw Error(ErrorCode::Protocol, "unknown field '" + it.key() + "'");
    }
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw Error(ErrorCode::Protocol, "kind: missing or not a string");
  const auto kind = kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw Error(ErrorCode::Protocol, "kind: unknown value '" + j["kind"].get<std::string>() + "'");
  if (!j.contains("seq") || !j["seq"].is_number_integer()) throw Error(ErrorCode::Protocol, "seq: missing or not an integer");
  SessionMessage m;
  m.kind = *kind;
  m.seq = j["seq"].get<std::int64_t>();
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw Error(ErrorCode::Protocol, "payload: must be an object");
    m.payload = j["payload"];
  }
  return m;
}

/// Action vector of a HUMAN_ACTION or LABEL payload, checked for width.
inline std::vector<double> payload_action(const SessionMessage& m, std::size_t dim) {
  const auto it = m.payload.find("action");
  if (it == m.payload.end() || !it->is_array()) throw Error(ErrorCode::Protocol, "payload.action: missing array");
  if (it->size() != dim) {
    throw Error(ErrorCode::Protocol, "payload.action: expected " + std::to_string(dim) + " components");
  }
  std::vector<double> a;
  for (const auto& v : *it) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw Error(ErrorCode::Protocol, "payload.action: components must be finite numbers");
    }
    a.push_back(v.get<double>());
  }
  return a;
}

}  // namespace reil::bridge
