#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "reil/envs/cartpole.hpp"
#include "reil/envs/navsim.hpp"
#include "reil/envs/rollout.hpp"

using namespace reil;
using namespace reil::envs;

namespace {

// Cart-pole equations written from the Lagrangian form: solve the 2x2 mass
// matrix system for (x_acc, theta_acc) directly.
std::array<double, 4> reference_step(const std::array<double, 4>& s, double a) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, dt = 0.02, f = 10.0 * a;
  const double th = s[2], w = s[3];
  // [ (mc+mp)        mp l cos ] [xa]   [ f + mp l w^2 sin ]
  // [ cos            4l/3     ] [ta] = [ g sin            ]
  const double a11 = mc + mp, a12 = mp * l * std::cos(th);
  const double a21 = std::cos(th), a22 = 4.0 * l / 3.0;
  const double b1 = f + mp * l * w * w * std::sin(th), b2 = g * std::sin(th);
  const double det = a11 * a22 - a12 * a21;
  const double xa = (b1 * a22 - a12 * b2) / det;
  const double ta = (a11 * b2 - a21 * b1) / det;
  return {s[0] + dt * s[1], s[1] + dt * xa, s[2] + dt * s[3], s[3] + dt * ta};
}

}  // namespace

TEST(Cartpole, EquilibriumStaysPut) {
  const auto n = cartpole_step({}, 0.0);
  EXPECT_EQ(n.x, 0.0);
  EXPECT_EQ(n.x_dot, 0.0);
  EXPECT_EQ(n.theta, 0.0);
  EXPECT_EQ(n.theta_dot, 0.0);
  EXPECT_EQ(n.step_count, 1);
}

TEST(Cartpole, PositiveForceAccelerates) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 100; ++i) {
    CartpoleState s{u(rng), u(rng), u(rng), u(rng), 0};
    EXPECT_GT(cartpole_step(s, 1.0).x_dot, cartpole_step(s, 0.0).x_dot);
  }
}

TEST(Cartpole, MatchesReferenceIntegrator) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.05, 0.05), act(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    CartpoleState s{u(rng), u(rng), u(rng), u(rng), 0};
    std::array<double, 4> r{s.x, s.x_dot, s.theta, s.theta_dot};
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double a = act(rng);
      s = cartpole_step(s, a);
      r = reference_step(r, a);
      worst = std::max({worst, std::abs(s.x - r[0]), std::abs(s.x_dot - r[1]), std::abs(s.theta - r[2]),
                        std::abs(s.theta_dot - r[3])});
    }
    EXPECT_LE(worst, 1e-9);
  }
}

TEST(Cartpole, NonfiniteStateThrows) {
  CartpoleState s;
  s.theta = std::nan("");
  try {
    cartpole_step(s, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonfiniteState);
  }
}

TEST(Cartpole, DGoodExamples) {
  EXPECT_TRUE(in_d_good_cartpole({}));
  EXPECT_FALSE(in_d_good_cartpole({2.5, 0, 0, 0, 0}));
  EXPECT_FALSE(in_d_good_cartpole({0, 0, 0.21, 0, 0}));
}

TEST(Cartpole, DGoodGrid) {
  const double lim_th = 12.0 * std::numbers::pi / 180.0;
  for (int i = -300; i <= 300; ++i) {
    for (int j = -300; j <= 300; ++j) {
      const double x = i * 0.01, th = j * 0.001;
      const bool expected = std::abs(x) < 2.0 && std::abs(th) < lim_th;
      ASSERT_EQ(in_d_good_cartpole({x, 1.0, th, -1.0, 0}), expected) << x << " " << th;
    }
  }
}

TEST(Cartpole, SupervisorSigns) {
  EXPECT_EQ(cartpole_supervisor({}), 0.0);
  EXPECT_GT(cartpole_supervisor({0, 0, 0.05, 0, 0}), 0.0);
  EXPECT_LE(std::abs(cartpole_supervisor({1.5, 2, 0.2, 2, 0})), 1.0);
}

TEST(Cartpole, SupervisorClosedLoop) {
  CartpoleState s{0, 0, 0.1, 0, 0};
  int settled = -1;
  for (int t = 1; t <= 3000; ++t) {
    s = cartpole_step(s, cartpole_supervisor(s));
    ASSERT_TRUE(in_d_good_cartpole(s)) << "left D_good at step " << t;
    if (settled < 0 && std::abs(s.theta) < 0.017) settled = t;
  }
  ASSERT_GT(settled, 0);
  EXPECT_LE(settled, 200);
}

TEST(Cartpole, SuccessNeedsConsecutiveAgentSteps) {
  CartpoleConfig cfg;
  cfg.success_steps = 10;
  Cartpole env(cfg);
  env.reset(1);
  for (int i = 0; i < 9; ++i) EXPECT_FALSE(env.step(env.supervisor_action(), false).terminal);
  EXPECT_FALSE(env.step(env.supervisor_action(), true).terminal);
  EXPECT_EQ(env.agent_run(), 0);
  for (int i = 0; i < 9; ++i) EXPECT_FALSE(env.step(env.supervisor_action(), false).terminal);
  const auto o = env.step(env.supervisor_action(), false);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.kind, TerminalKind::TaskSuccess);
}

TEST(Cartpole, FailureEnvelopeEndsEpisode) {
  Cartpole env;
  env.set_state({0, 0, 0.43, 0, 0});
  const auto o = env.step({0.0}, false);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.kind, TerminalKind::TaskFailure);
}

TEST(Cartpole, DeterministicGivenSeedAndActions) {
  Cartpole a, b;
  a.reset(99);
  b.reset(99);
  for (int i = 0; i < 50; ++i) {
    a.step({0.3}, false);
    b.step({0.3}, false);
  }
  EXPECT_EQ(a.state(), b.state());
}

TEST(Rollout, AgentActsInsideDGood) {
  Cartpole env;
  env.set_state({0, 0, 0.01, 0, 0});
  ControlState control;
  const auto r = rollout_step(env, SupervisorGate{}, control, {0.05});
  EXPECT_EQ(r.owner, Owner::Agent);
  EXPECT_EQ(r.transition.f_demo, 0);
  EXPECT_EQ(r.transition.action, std::vector<double>{0.05});
}

TEST(Rollout, UnacceptableProposalHandsOver) {
  Cartpole env;
  env.set_state({1.999, 1.0, 0.0, 0.0, 0});
  const auto label = env.supervisor_action();
  ControlState control;
  const auto r = rollout_step(env, SupervisorGate{}, control, {1.0});
  EXPECT_EQ(r.owner, Owner::Gate);
  EXPECT_TRUE(r.gate_triggered);
  EXPECT_EQ(r.transition.f_demo, 1);
  EXPECT_EQ(r.transition.action, label);
}

TEST(Rollout, HumanOverridesEverything) {
  Cartpole env;
  env.set_state({0, 0, 0.01, 0, 0});
  ControlState control;
  const auto r = rollout_step(env, SupervisorGate{}, control, {0.05}, std::vector<double>{3.0});
  EXPECT_EQ(r.owner, Owner::Human);
  EXPECT_EQ(r.transition.f_demo, 1);
  EXPECT_EQ(r.transition.action, std::vector<double>{1.0});
}

// Scripted trace: the pole starts at the edge of D_good falling outward, the
// agent then proposes the supervisor's own action. Control must come back
// exactly `hold` steps after the state enters the inner region, and every
// recorded action must match its owner.
TEST(Rollout, HandBackAfterHoldSteps) {
  for (int hold : {1, 5, 9}) {
    Cartpole env;
    env.set_state({0.0, 0.0, 0.2, 0.5, 0});
    SupervisorGate gate{0.5, hold};
    ControlState control;
    std::vector<std::uint8_t> f;
    std::vector<bool> inner;
    for (int t = 0; t < 400; ++t) {
      inner.push_back(std::abs(env.state().x) < 1.0 && std::abs(env.state().theta) < 0.5 * 12 * std::numbers::pi / 180);
      const auto proposal = t == 0 ? std::vector<double>{1.0} : env.supervisor_action();
      const auto supervisor = env.supervisor_action();
      auto r = rollout_step(env, gate, control, proposal);
      EXPECT_EQ(r.transition.action, r.transition.f_demo ? supervisor : proposal);
      f.push_back(r.transition.f_demo);
      ASSERT_FALSE(r.outcome.terminal);
    }
    ASSERT_EQ(f[0], 1);
    // Oracle: first index preceded by `hold` supervised steps taken from inner states.
    int expected_release = -1;
    for (int t = hold; t < int(f.size()); ++t) {
      bool ok = true;
      for (int k = t - hold; k < t; ++k) ok = ok && inner[std::size_t(k)];
      if (ok) {
        expected_release = t;
        break;
      }
    }
    ASSERT_GT(expected_release, 0);
    for (int t = 0; t < int(f.size()); ++t) EXPECT_EQ(f[std::size_t(t)], t < expected_release ? 1 : 0) << t;
  }
}

TEST(Navsim, ZeroActionKeepsPose) {
  const Pose p{0.3, -0.2, 1.1};
  EXPECT_EQ(navsim_step(p, 0.0, 0.0), p);
}

TEST(Navsim, StraightLineStep) {
  const Pose n = navsim_step({0, 0, 0}, 0.1, 0.0);
  EXPECT_NEAR(n.x, 0.05, 1e-15);
  EXPECT_EQ(n.y, 0.0);
}

namespace {
double circumradius(const Pose& a, const Pose& b, const Pose& c) {
  const double ab = std::hypot(a.x - b.x, a.y - b.y), bc = std::hypot(b.x - c.x, b.y - c.y),
               ca = std::hypot(c.x - a.x, c.y - a.y);
  const double area2 = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  return ab * bc * ca / (2.0 * area2);
}
}  // namespace

TEST(Navsim, ArcRadiusMatchesFineIntegrator) {
  std::vector<Pose> coarse{{0, 0, 0}};
  for (int t = 0; t < 100; ++t) coarse.push_back(navsim_step(coarse.back(), 0.1, 0.4));
  double r = 0.0;
  for (std::size_t i = 0; i + 2 < coarse.size(); ++i) r += circumradius(coarse[i], coarse[i + 1], coarse[i + 2]);
  r /= double(coarse.size() - 2);

  // Fine explicit integration of the continuous unicycle.
  std::vector<Pose> fine{{0, 0, 0}};
  Pose p{0, 0, 0};
  const int sub = 5000;
  for (int t = 0; t < 100; ++t) {
    for (int k = 0; k < sub; ++k) {
      const double h = 0.5 / sub;
      p.x += 0.1 * std::cos(p.heading) * h;
      p.y += 0.1 * std::sin(p.heading) * h;
      p.heading += 0.4 * h;
    }
    fine.push_back(p);
  }
  double rf = 0.0;
  for (std::size_t i = 0; i + 2 < fine.size(); ++i) rf += circumradius(fine[i], fine[i + 1], fine[i + 2]);
  rf /= double(fine.size() - 2);
  EXPECT_NEAR(rf, 0.25, 1e-3);
  EXPECT_NEAR(r, rf, 0.05 * rf);
}

TEST(Navsim, EmptySceneReadsMaxRange) {
  NavState s;
  s.goal_x = 1.0;
  const auto obs = navsim_observe(s);
  ASSERT_EQ(obs.size(), 18u);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(obs[std::size_t(i)], 2.0);
  EXPECT_EQ(obs[16], 1.0);
  EXPECT_EQ(obs[17], 0.0);
}

TEST(Navsim, ObstacleDeadAhead) {
  NavState s;
  s.goal_x = 1.0;
  s.obstacles = {{0.5, 0.0, 0.1}};
  const auto obs = navsim_observe(s);
  EXPECT_NEAR(obs[7], 0.4, 0.02);
  EXPECT_NEAR(obs[8], 0.4, 0.02);
  EXPECT_EQ(obs[0], 2.0);
}

namespace {
// March along the ray until inside a circle, then bisect the crossing.
double brute_force_ray(double px, double py, double angle, const std::vector<Circle>& obs, double max_range) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  auto inside = [&](double t) {
    for (const auto& c : obs) {
      if (std::hypot(px + t * dx - c.x, py + t * dy - c.y) <= c.r) return true;
    }
    return false;
  };
  if (inside(0.0)) return 0.0;
  const double h = 1e-4;
  for (double t = h; t <= max_range + h; t += h) {
    if (!inside(t)) continue;
    double lo = t - h, hi = t;
    for (int k = 0; k < 80; ++k) {
      const double mid = 0.5 * (lo + hi);
      (inside(mid) ? hi : lo) = mid;
    }
    return std::min(hi, max_range);
  }
  return max_range;
}
}  // namespace

TEST(Navsim, BeamsMatchRayOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5), r(0.05, 0.3), h(-3.14, 3.14);
  const NavsimConfig cfg;
  for (int scene = 0; scene < 20; ++scene) {
    NavState s;
    s.pose = {0, 0, h(rng)};
    s.goal_x = 1.0;
    for (int k = 0; k < 4; ++k) {
      Circle c{u(rng), u(rng), r(rng)};
      if (std::hypot(c.x, c.y) > c.r + 0.05) s.obstacles.push_back(c);
    }
    const auto obs = navsim_observe(s, cfg);
    for (int i = 0; i < cfg.beams; ++i) {
      const double expected = brute_force_ray(0, 0, s.pose.heading + beam_angle(i, cfg), s.obstacles, cfg.max_range);
      EXPECT_NEAR(obs[std::size_t(i)], expected, 1e-9);
    }
  }
}

TEST(Navsim, SupervisorExamples) {
  NavState s;
  s.goal_x = 0.0;
  EXPECT_EQ(navsim_supervisor(s)[0], 0.0);
  s.goal_x = 1.0;
  const auto a = navsim_supervisor(s);
  EXPECT_EQ(a[0], 0.1);
  EXPECT_EQ(a[1], 0.0);
}

TEST(Navsim, SupervisorSolvesGeneratedScenes) {
  Navsim env;
  int solved = 0;
  for (int i = 0; i < 50; ++i) {
    env.reset(std::uint64_t(1000 + i));
    bool safe = true;
    StepOutcome o;
    while (!o.terminal) {
      o = env.step(env.supervisor_action(), true);
      safe = safe && clearance(env.state().pose.x, env.state().pose.y, env.state().obstacles) >
                         env.config().safety_clearance;
    }
    solved += safe && o.kind == TerminalKind::TaskSuccess;
  }
  EXPECT_GE(solved, 48);
}

TEST(Navsim, GoalEndsEpisodeWithLabel) {
  Navsim env;
  env.load({Pose{0, 0, 0}, 0.12, 0.0, {}});
  const auto o = env.step({0.1, 0.0}, false);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.kind, TerminalKind::TaskSuccess);
  EXPECT_EQ(env.task_done_label(), 1);
}

TEST(Navsim, CollisionEndsEpisode) {
  Navsim env;
  env.load({Pose{0, 0, 0}, 1.5, 0.0, {{0.12, 0.0, 0.1}}});
  const auto o = env.step({0.1, 0.0}, false);
  EXPECT_TRUE(o.terminal);
  EXPECT_EQ(o.kind, TerminalKind::TaskFailure);
}

TEST(Navsim, GateRejectsApproachingObstacle) {
  Navsim env;
  env.load({Pose{0, 0, 0}, 1.5, 0.0, {{0.18, 0.0, 0.1}}});
  EXPECT_FALSE(env.acceptable({0.1, 0.0}));
  Navsim open;
  open.load({Pose{0, 0, 0}, 1.5, 0.0, {}});
  EXPECT_TRUE(open.acceptable({0.1, 0.0}));
}

TEST(Navsim, SceneJsonRoundTrip) {
  const auto scene = generate_scene(7);
  EXPECT_EQ(scene_from_json(scene_to_json(scene)), scene);
  const auto path = std::filesystem::temp_directory_path() / "reil_scene_test.json";
  {
    std::ofstream f(path);
    f << scene_to_json(scene).dump();
  }
  EXPECT_EQ(load_scene(path.string()), scene);
  std::filesystem::remove(path);
}

TEST(Navsim, MalformedSceneIsParseError) {
  auto j = scene_to_json(generate_scene(7));
  j.erase("goal");
  try {
    scene_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Navsim, ScenesDifferPerSeedAndRepeat) {
  EXPECT_EQ(generate_scene(3), generate_scene(3));
  EXPECT_NE(generate_scene(3), generate_scene(4));
}
