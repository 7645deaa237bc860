#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "reil/envs/environment.hpp"
#include "reil/error.hpp"

namespace reil::envs {

struct Circle {
  double x = 0.0;
  double y = 0.0;
  double r = 0.1;
  friend bool operator==(const Circle&, const Circle&) = default;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Start pose, goal and obstacles of one navigation episode.
struct NavScene {
  Pose start;
  double goal_x = 1.8;
  double goal_y = 0.0;
  std::vector<Circle> obstacles;
  friend bool operator==(const NavScene&, const NavScene&) = default;
};

struct NavState {
  Pose pose;
  double goal_x = 0.0;
  double goal_y = 0.0;
  std::vector<Circle> obstacles;
  std::int64_t step_count = 0;
};

struct NavsimConfig {
  double dt = 0.5;
  double v_max = 0.1;
  double omega_max = 0.4;
  int beams = 16;
  double fov = std::numbers::pi;
  double max_range = 2.0;
  double goal_radius = 0.1;
  int time_limit = 75;  // one episode fills the default sequence length
  // Acceptable set.
  double safety_clearance = 0.05;
  double min_progress_speed = 0.02;
  double max_progress_bearing = std::numbers::pi / 2;
  // Potential-field supervisor.
  double influence = 0.35;
  double k_repulse = 0.6;
  double k_tangent = 1.2;
  double k_turn = 1.5;
  double slow_clearance = 0.12;
  // Scene generation.
  double goal_dist_min = 1.6;
  double goal_dist_max = 1.9;
  int obstacles_min = 2;
  int obstacles_max = 3;
  double radius_min = 0.08;
  double radius_max = 0.15;
};

inline double wrap_angle(double a) {
  if (a >= -std::numbers::pi && a < std::numbers::pi) return a;
  a = std::fmod(a + std::numbers::pi, 2 * std::numbers::pi);
  if (a < 0) a += 2 * std::numbers::pi;
  return a - std::numbers::pi;
}

/// Unicycle step; the heading is advanced before the translation.
inline Pose navsim_step(const Pose& p, double v, double omega, double dt = 0.5) {
  Pose n;
  n.heading = wrap_angle(p.heading + omega * dt);
  n.x = p.x + v * std::cos(n.heading) * dt;
  n.y = p.y + v * std::sin(n.heading) * dt;
  return n;
}

/// Distance along a ray to the first circle it hits, or max_range.
inline double ray_cast(double px, double py, double angle, const std::vector<Circle>& obstacles, double max_range) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  double best = max_range;
  for (const auto& c : obstacles) {
    const double fx = px - c.x, fy = py - c.y;
    const double cc = fx * fx + fy * fy - c.r * c.r;
    if (cc <= 0.0) return 0.0;  // inside the obstacle
    const double b = fx * dx + fy * dy;
    const double disc = b * b - cc;
    if (disc < 0.0) continue;
    const double t = -b - std::sqrt(disc);
    if (t >= 0.0 && t < best) best = t;
  }
  return best;
}

inline double clearance(double x, double y, const std::vector<Circle>& obstacles) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& o : obstacles) c = std::min(c, std::hypot(x - o.x, y - o.y) - o.r);
  return c;
}

inline double goal_bearing(const Pose& p, double gx, double gy) {
  return wrap_angle(std::atan2(gy - p.y, gx - p.x) - p.heading);
}

/// Beam i points at the centre of the i-th of `beams` equal sectors of the fan.
inline double beam_angle(int i, const NavsimConfig& cfg) {
  return -cfg.fov / 2 + (i + 0.5) * cfg.fov / cfg.beams;
}

/// [beam ranges..., goal distance, goal bearing]
inline std::vector<double> navsim_observe(const NavState& s, const NavsimConfig& cfg = {}) {
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(cfg.beams) + 2);
  for (int i = 0; i < cfg.beams; ++i) {
    obs.push_back(ray_cast(s.pose.x, s.pose.y, s.pose.heading + beam_angle(i, cfg), s.obstacles, cfg.max_range));
  }
  obs.push_back(std::hypot(s.goal_x - s.pose.x, s.goal_y - s.pose.y));
  obs.push_back(goal_bearing(s.pose, s.goal_x, s.goal_y));
  return obs;
}

/// Goal attraction plus obstacle repulsion with a tangential component that
/// steers around obstacles on the goal-facing side.
inline std::vector<double> navsim_supervisor(const NavState& s, const NavsimConfig& cfg = {}) {
  const double gx = s.goal_x - s.pose.x, gy = s.goal_y - s.pose.y;
  const double d = std::hypot(gx, gy);
  if (d < 1e-9) return {0.0, 0.0};
  double fx = gx / d, fy = gy / d;
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& o : s.obstacles) {
    const double ox = s.pose.x - o.x, oy = s.pose.y - o.y;
    const double dist = std::hypot(ox, oy);
    const double c = dist - o.r;
    nearest = std::min(nearest, c);
    if (c >= cfg.influence || dist < 1e-9) continue;
    const double nx = ox / dist, ny = oy / dist;
    const double w = (cfg.influence - c) / cfg.influence;
    // Tangent on the side the goal lies.
    double tx = -ny, ty = nx;
    if (tx * gx + ty * gy < 0) {
      tx = -tx;
      ty = -ty;
    }
    fx += w * (cfg.k_repulse * nx + cfg.k_tangent * tx);
    fy += w * (cfg.k_repulse * ny + cfg.k_tangent * ty);
  }
  const double err = wrap_angle(std::atan2(fy, fx) - s.pose.heading);
  const double omega = std::clamp(cfg.k_turn * err, -cfg.omega_max, cfg.omega_max);
  double v = cfg.v_max * std::min(1.0, d / cfg.v_max) * std::clamp(std::cos(err), 0.3, 1.0);
  if (std::isfinite(nearest) && nearest < cfg.slow_clearance) v *= std::max(0.3, nearest / cfg.slow_clearance);
  return {std::clamp(v, -cfg.v_max, cfg.v_max), omega};
}

/// Seeded scene: goal 1.6-1.9 m away, 2-3 obstacles scattered along the path
/// with passable gaps.
inline NavScene generate_scene(std::uint64_t seed, const NavsimConfig& cfg = {}) {
  std::mt19937_64 rng(seed);
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  NavScene scene;
  const double dir = u(-std::numbers::pi, std::numbers::pi);
  const double dist = u(cfg.goal_dist_min, cfg.goal_dist_max);
  scene.goal_x = dist * std::cos(dir);
  scene.goal_y = dist * std::sin(dir);
  scene.start = Pose{0.0, 0.0, wrap_angle(dir + u(-0.5, 0.5))};
  const int count = std::uniform_int_distribution<int>(cfg.obstacles_min, cfg.obstacles_max)(rng);
  for (int attempt = 0; static_cast<int>(scene.obstacles.size()) < count && attempt < 1000; ++attempt) {
    const double along = u(0.25, 0.8) * dist;
    const double lateral = u(-0.25, 0.25);
    Circle c{along * std::cos(dir) - lateral * std::sin(dir), along * std::sin(dir) + lateral * std::cos(dir),
             u(cfg.radius_min, cfg.radius_max)};
    bool ok = std::hypot(c.x, c.y) - c.r > 0.3 && std::hypot(c.x - scene.goal_x, c.y - scene.goal_y) - c.r > 0.25;
    for (const auto& o : scene.obstacles) ok = ok && std::hypot(c.x - o.x, c.y - o.y) - c.r - o.r > 0.3;
    if (ok) scene.obstacles.push_back(c);
  }
  return scene;
}

inline nlohmann::json scene_to_json(const NavScene& s) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : s.obstacles) obs.push_back({{"x", o.x}, {"y", o.y}, {"r", o.r}});
  return {{"start", {{"x", s.start.x}, {"y", s.start.y}, {"heading", s.start.heading}}},
          {"goal", {{"x", s.goal_x}, {"y", s.goal_y}}},
          {"obstacles", obs}};
}

inline NavScene scene_from_json(const nlohmann::json& j) {
  try {
    NavScene s;
    const auto& st = j.at("start");
    s.start = Pose{st.at("x").get<double>(), st.at("y").get<double>(), st.at("heading").get<double>()};
    s.goal_x = j.at("goal").at("x").get<double>();
    s.goal_y = j.at("goal").at("y").get<double>();
    for (const auto& o : j.at("obstacles")) {
      Circle c{o.at("x").get<double>(), o.at("y").get<double>(), o.at("r").get<double>()};
      if (!(c.r > 0.0)) throw Error(ErrorCode::ParseError, "obstacle radius must be positive");
      s.obstacles.push_back(c);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scene: ") + e.what());
  }
}

inline NavScene load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot read scene " + path);
  try {
    return scene_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

/// 2-D kinematic navigation among circular obstacles.
class Navsim final : public Environment {
 public:
  explicit Navsim(NavsimConfig cfg = {}) : cfg_(cfg), box_(ActionBox::symmetric({cfg.v_max, cfg.omega_max})) {}

  std::string name() const override { return "navsim"; }
  std::size_t obs_dim() const override { return static_cast<std::size_t>(cfg_.beams) + 2; }
  const ActionBox& action_box() const override { return box_; }

  /// Fixed scenes replace seeded generation when set.
  void set_scenes(std::vector<NavScene> scenes) { scenes_ = std::move(scenes); }

  void reset(std::uint64_t seed) override {
    load(scenes_.empty() ? generate_scene(seed, cfg_) : scenes_[seed % scenes_.size()]);
  }

  void load(const NavScene& scene) {
    scene_ = scene;
    state_ = NavState{scene.start, scene.goal_x, scene.goal_y, scene.obstacles, 0};
    reached_ = false;
  }

  const NavState& state() const { return state_; }
  const NavScene& scene() const { return scene_; }
  const NavsimConfig& config() const { return cfg_; }

  std::vector<double> observe() const override { return navsim_observe(state_, cfg_); }
  std::vector<double> supervisor_action() const override { return navsim_supervisor(state_, cfg_); }

  double goal_distance() const { return std::hypot(state_.goal_x - state_.pose.x, state_.goal_y - state_.pose.y); }

  /// Safe now and after the proposed step, and making forward progress
  /// toward the goal.
  bool acceptable(const std::vector<double>& action) const override {
    if (action.size() != 2) throw Error(ErrorCode::ShapeError, "navsim action has two components");
    const auto a = box_.clip(action);
    const Pose next = navsim_step(state_.pose, a[0], a[1], cfg_.dt);
    if (clearance(state_.pose.x, state_.pose.y, state_.obstacles) <= cfg_.safety_clearance) return false;
    if (clearance(next.x, next.y, state_.obstacles) <= cfg_.safety_clearance) return false;
    if (a[0] < cfg_.min_progress_speed) return false;
    return std::abs(goal_bearing(next, state_.goal_x, state_.goal_y)) < cfg_.max_progress_bearing;
  }

  /// Inner region: the clearance threshold divided by the margin and the
  /// bearing limit multiplied by it (0.5: 0.1 m and 45 degrees).
  bool in_handback_region(double margin) const override {
    return clearance(state_.pose.x, state_.pose.y, state_.obstacles) > cfg_.safety_clearance / margin &&
           std::abs(goal_bearing(state_.pose, state_.goal_x, state_.goal_y)) < margin * cfg_.max_progress_bearing;
  }

  StepOutcome step(const std::vector<double>& action, bool) override {
    if (action.size() != 2) throw Error(ErrorCode::ShapeError, "navsim action has two components");
    const auto a = box_.clip(action);
    state_.pose = navsim_step(state_.pose, a[0], a[1], cfg_.dt);
    ++state_.step_count;
    reached_ = goal_distance() < cfg_.goal_radius;
    if (clearance(state_.pose.x, state_.pose.y, state_.obstacles) <= 0.0) return {true, TerminalKind::TaskFailure};
    if (reached_) return {true, TerminalKind::TaskSuccess};
    if (state_.step_count >= cfg_.time_limit) return {true, TerminalKind::TimeLimit};
    return {};
  }

  std::int64_t step_count() const override { return state_.step_count; }
  std::uint8_t task_done_label() const override { return reached_ ? 1 : 0; }
  double angular_command(const std::vector<double>& action) const override { return action.at(1); }

  nlohmann::json state_json() const override {
    nlohmann::json j = scene_to_json(scene_);
    j["pose"] = {{"x", state_.pose.x}, {"y", state_.pose.y}, {"heading", state_.pose.heading}};
    auto obs = observe();
    obs.resize(static_cast<std::size_t>(cfg_.beams));
    j["beams"] = obs;
    return j;
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<Navsim>(*this); }

 private:
  NavsimConfig cfg_;
  ActionBox box_;
  std::vector<NavScene> scenes_;
  NavScene scene_;
  NavState state_;
  bool reached_ = false;
};

}  // namespace reil::envs
