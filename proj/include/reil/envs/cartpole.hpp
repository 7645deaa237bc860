#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "reil/envs/environment.hpp"
#include "reil/error.hpp"

namespace reil::envs {

struct CartpoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  std::int64_t step_count = 0;

  friend bool operator==(const CartpoleState&, const CartpoleState&) = default;
};

struct CartpoleParams {
  double gravity = 9.8;
  double mass_cart = 1.0;
  double mass_pole = 0.1;
  double half_length = 0.5;
  double force_mag = 10.0;
  double dt = 0.02;
};

/// One explicit-Euler step of the classic cart-pole with force = force_mag * a.
inline CartpoleState cartpole_step(const CartpoleState& s, double a, const CartpoleParams& p = {}) {
  const bool finite = std::isfinite(s.x) && std::isfinite(s.x_dot) && std::isfinite(s.theta) &&
                      std::isfinite(s.theta_dot) && std::isfinite(a);
  if (!finite) throw Error(ErrorCode::NonfiniteState, "cartpole state or action is not finite");
  const double force = p.force_mag * a;
  const double total = p.mass_cart + p.mass_pole;
  const double pml = p.mass_pole * p.half_length;
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const double temp = (force + pml * s.theta_dot * s.theta_dot * sn) / total;
  const double theta_acc =
      (p.gravity * sn - c * temp) / (p.half_length * (4.0 / 3.0 - p.mass_pole * c * c / total));
  const double x_acc = temp - pml * theta_acc * c / total;
  CartpoleState n;
  n.x = s.x + p.dt * s.x_dot;
  n.x_dot = s.x_dot + p.dt * x_acc;
  n.theta = s.theta + p.dt * s.theta_dot;
  n.theta_dot = s.theta_dot + p.dt * theta_acc;
  n.step_count = s.step_count + 1;
  return n;
}

inline constexpr double kCartpoleXLimit = 2.0;
inline constexpr double kCartpoleThetaLimit = 12.0 * std::numbers::pi / 180.0;

inline bool in_d_good_cartpole(const CartpoleState& s, double fraction = 1.0) {
  return std::abs(s.x) < fraction * kCartpoleXLimit && std::abs(s.theta) < fraction * kCartpoleThetaLimit;
}

/// Linear state feedback (LQR with Q = diag(1, 1, 10, 1), R = 1 on the
/// linearized plant), clipped to [-1, 1].
struct CartpoleGains {
  std::array<double, 4> k{1.0, 1.72053462, 10.68317288, 2.82433252};
};

inline double cartpole_supervisor(const CartpoleState& s, const CartpoleGains& g = {}) {
  const double u = g.k[0] * s.x + g.k[1] * s.x_dot + g.k[2] * s.theta + g.k[3] * s.theta_dot;
  return std::clamp(u, -1.0, 1.0);
}

struct CartpoleConfig {
  CartpoleParams params;
  CartpoleGains gains;
  double failure_x = 2.4;
  double failure_theta = 24.0 * std::numbers::pi / 180.0;
  int success_steps = 3000;
  int time_limit = 10000;
  double init_range = 0.05;
};

/// Continuous-action cart-pole. Success is `success_steps` consecutive
/// agent-controlled steps; leaving the failure envelope ends the episode.
class Cartpole final : public Environment {
 public:
  explicit Cartpole(CartpoleConfig cfg = {}) : cfg_(cfg), box_(ActionBox::symmetric({1.0})) {}

  std::string name() const override { return "cartpole"; }
  std::size_t obs_dim() const override { return 4; }
  const ActionBox& action_box() const override { return box_; }

  void reset(std::uint64_t seed) override {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-cfg_.init_range, cfg_.init_range);
    state_ = CartpoleState{u(rng), u(rng), u(rng), u(rng), 0};
    agent_run_ = 0;
  }

  void set_state(const CartpoleState& s) {
    state_ = s;
    agent_run_ = 0;
  }
  const CartpoleState& state() const { return state_; }
  int agent_run() const { return agent_run_; }
  const CartpoleConfig& config() const { return cfg_; }

  std::vector<double> observe() const override { return {state_.x, state_.x_dot, state_.theta, state_.theta_dot}; }

  std::vector<double> supervisor_action() const override { return {cartpole_supervisor(state_, cfg_.gains)}; }

  /// (s, a) is acceptable when s and its one-step successor are both in D_good.
  bool acceptable(const std::vector<double>& action) const override {
    if (action.size() != 1) throw Error(ErrorCode::ShapeError, "cartpole action has one component");
    return in_d_good_cartpole(state_) && in_d_good_cartpole(cartpole_step(state_, action[0], cfg_.params));
  }

  bool in_handback_region(double margin) const override { return in_d_good_cartpole(state_, margin); }

  StepOutcome step(const std::vector<double>& action, bool supervised) override {
    if (action.size() != 1) throw Error(ErrorCode::ShapeError, "cartpole action has one component");
    state_ = cartpole_step(state_, std::clamp(action[0], -1.0, 1.0), cfg_.params);
    agent_run_ = supervised ? 0 : agent_run_ + 1;
    if (std::abs(state_.x) >= cfg_.failure_x || std::abs(state_.theta) >= cfg_.failure_theta) {
      return {true, TerminalKind::TaskFailure};
    }
    if (agent_run_ >= cfg_.success_steps) return {true, TerminalKind::TaskSuccess};
    if (state_.step_count >= cfg_.time_limit) return {true, TerminalKind::TimeLimit};
    return {};
  }

  std::int64_t step_count() const override { return state_.step_count; }
  double angular_command(const std::vector<double>& action) const override { return action.at(0); }

  nlohmann::json state_json() const override {
    return {{"x", state_.x}, {"x_dot", state_.x_dot}, {"theta", state_.theta}, {"theta_dot", state_.theta_dot}};
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<Cartpole>(*this); }

 private:
  CartpoleConfig cfg_;
  ActionBox box_;
  CartpoleState state_;
  int agent_run_ = 0;
};

/// Length of the trailing run of agent-controlled steps.
inline int trailing_agent_run(const std::vector<std::uint8_t>& f_demo) {
  int run = 0;
  for (auto it = f_demo.rbegin(); it != f_demo.rend() && *it == 0; ++it) ++run;
  return run;
}

}  // namespace reil::envs
