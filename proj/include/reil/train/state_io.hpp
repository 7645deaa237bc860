#pragma once

#include <string>

#include "reil/nn/checkpoint.hpp"
#include "reil/train/td3.hpp"

namespace reil::train {

/// All six networks plus the update counter. The caller rebuilds the models
/// from the same ModelSpec before restoring.
template <class T>
nlohmann::json train_state_to_json(const TrainState<T>& s, std::uint64_t seed) {
  const auto& al = s.actor_model->layout();
  const auto& cl = s.critic_model->layout();
  return {{"update_counter", s.update_counter},
          {"actor_steps", s.actor_steps},
          {"actor", nn::to_json(nn::make_checkpoint(al, s.actor, seed))},
          {"critic_1", nn::to_json(nn::make_checkpoint(cl, s.critic_1, seed))},
          {"critic_2", nn::to_json(nn::make_checkpoint(cl, s.critic_2, seed))},
          {"target_actor", nn::to_json(nn::make_checkpoint(al, s.target_actor, seed))},
          {"target_critic_1", nn::to_json(nn::make_checkpoint(cl, s.target_critic_1, seed))},
          {"target_critic_2", nn::to_json(nn::make_checkpoint(cl, s.target_critic_2, seed))}};
}

template <class T>
void restore_train_state(TrainState<T>& s, const nlohmann::json& j) {
  try {
    const auto& al = s.actor_model->layout();
    const auto& cl = s.critic_model->layout();
    auto load = [&](const char* key, const nn::ParamLayout& layout) {
      return nn::restore<T>(nn::checkpoint_from_json(j.at(key)), layout);
    };
    s.actor = load("actor", al);
    s.critic_1 = load("critic_1", cl);
    s.critic_2 = load("critic_2", cl);
    s.target_actor = load("target_actor", al);
    s.target_critic_1 = load("target_critic_1", cl);
    s.target_critic_2 = load("target_critic_2", cl);
    s.update_counter = j.at("update_counter").get<std::int64_t>();
    s.actor_steps = j.value("actor_steps", std::int64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("train state: ") + e.what());
  }
}

}  // namespace reil::train
