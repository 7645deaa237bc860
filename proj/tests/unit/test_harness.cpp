#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "reil/harness/experiment.hpp"
#include "reil/harness/stats.hpp"

using namespace reil;
using namespace reil::harness;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("reil_harness_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_cartpole(const std::string& out) {
  auto c = default_experiment(EnvKind::Cartpole);
  c.algorithm.updates_per_step = 1;
  c.model.hidden = {8};
  c.episodes = 2;
  c.runs = 2;
  c.cartpole_success_steps = 30;
  c.time_limit = 200;
  c.stop_on_success = false;
  c.out_dir = out;
  return c;
}

}  // namespace

TEST(Metrics, AngularAccelerationAlternating) {
  std::vector<double> w;
  for (int t = 0; t < 11; ++t) w.push_back(t % 2 ? -0.4 : 0.4);
  EXPECT_NEAR(angular_acceleration_metric(w), 0.8, 1e-15);
}

TEST(Metrics, AngularAccelerationRamp) {
  // Linear ramp: every difference equals the slope.
  std::vector<double> w;
  for (int t = 0; t < 20; ++t) w.push_back(0.05 * t - 0.3);
  EXPECT_NEAR(angular_acceleration_metric(w), 0.05, 1e-12);
}

TEST(Metrics, AngularAccelerationTooShort) {
  try {
    angular_acceleration_metric({0.1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooShort);
  }
}

TEST(Metrics, ActionErrorOppositeCorners) {
  // Opposite corners of a unit box: each normalized component differs by one.
  const std::vector<std::vector<double>> agent{{1.0, 1.0}, {1.0, 1.0}};
  const std::vector<std::vector<double>> label{{-1.0, -1.0}, {-1.0, -1.0}};
  EXPECT_NEAR(action_error_metric(agent, label, {1.0, 1.0}), std::sqrt(2.0), 1e-15);
}

TEST(Metrics, ActionErrorScalesWithBox) {
  const std::vector<std::vector<double>> agent{{0.3, 0.0}, {0.0, 0.2}};
  const std::vector<std::vector<double>> label{{0.0, 0.0}, {0.0, -0.2}};
  const std::vector<double> a_max{0.5, 0.4};
  double s = 0.0;
  s += std::pow(0.3 / 1.0, 2);
  s += std::pow(0.4 / 0.8, 2);
  EXPECT_NEAR(action_error_metric(agent, label, a_max), std::sqrt(s / 2.0), 1e-15);
}

TEST(Metrics, ActionErrorLengthMismatch) {
  try {
    action_error_metric({{0.0}}, {{0.0}, {1.0}}, {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Metrics, MovingAverageWindow) {
  const auto m = moving_average({1, 2, 3, 4, 5, 6}, 3);
  const std::vector<double> expect{1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
  ASSERT_EQ(m.size(), expect.size());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_DOUBLE_EQ(m[i], expect[i]);
  EXPECT_THROW(moving_average({1.0}, 0), Error);
}

TEST(MetricsCsv, RoundTripIsExact) {
  MetricsLog log;
  log.rows.push_back({0, 120, 40, 0.1 + 0.2, 1.0 / 3.0, std::nullopt, false});
  log.rows.push_back({1, 3000, 0, 3000.0, 0.0, 0.123456789012345678, true});
  std::stringstream ss;
  write_metrics_csv(log, ss);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kMetricsHeader);
  EXPECT_EQ(read_metrics_csv(ss), log);
}

TEST(MetricsCsv, BadRowNamesLine) {
  std::stringstream ss(std::string(kMetricsHeader) + "\n0,1,0,1,0,,1\n1,2,x,1,0,,0\n");
  try {
    read_metrics_csv(ss, "m.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("m.csv:3"), std::string::npos);
  }
}

TEST(Welch, FrozenReferenceValues) {
  const std::vector<double> a1{27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4};
  const std::vector<double> a2{27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4};
  const auto r = welch_t_test(a1, a2);
  EXPECT_NEAR(r.t, -2.455356398286006, 1e-9);
  EXPECT_NEAR(r.df, 24.988529290231416, 1e-9);
  EXPECT_NEAR(r.p, 0.021378001462866985, 1e-9);
  EXPECT_FALSE(r.degenerate);
}

TEST(Welch, SymmetricUnderSwap) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 9, 11};
  const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(Welch, ZeroVarianceIdenticalGroups) {
  const auto r = welch_t_test({5, 5, 5}, {5, 5});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.t, 0.0);
}

TEST(Welch, ZeroVarianceDifferentMeans) {
  const auto r = welch_t_test({5, 5, 5}, {7, 7});
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(std::isinf(r.t) && r.t < 0);
}

TEST(Welch, NeedsTwoPerGroup) { EXPECT_THROW(welch_t_test({1.0}, {1.0, 2.0}), Error); }

namespace {
MetricsLog run_with(std::int64_t supervised, bool success) {
  MetricsLog log;
  log.rows.push_back({0, 100, supervised, 0.0, 0.0, std::nullopt, success});
  return log;
}
}  // namespace

TEST(Summarize, SingleSuccessfulRunFlagsZeroStd) {
  const auto s = summarize({{"REIL", {run_with(300, true), run_with(900, false)}}});
  ASSERT_EQ(s.algorithms.size(), 1u);
  EXPECT_EQ(s.algorithms[0].runs, 2);
  EXPECT_EQ(s.algorithms[0].successes, 1);
  EXPECT_DOUBLE_EQ(s.algorithms[0].mean_supervised, 300.0);
  EXPECT_EQ(s.algorithms[0].std_supervised, 0.0);
  EXPECT_TRUE(s.algorithms[0].single_run);
}

TEST(Summarize, MeanStdAndPairwiseTest) {
  const auto s = summarize({{"A", {run_with(100, true), run_with(200, true), run_with(300, true)}},
                            {"B", {run_with(500, true), run_with(700, true)}},
                            {"C", {run_with(1, true)}}});
  ASSERT_EQ(s.algorithms.size(), 3u);
  EXPECT_DOUBLE_EQ(s.algorithms[0].mean_supervised, 200.0);
  EXPECT_DOUBLE_EQ(s.algorithms[0].std_supervised, 100.0);
  ASSERT_EQ(s.tests.size(), 3u);
  EXPECT_TRUE(s.tests[0].computed);
  EXPECT_NEAR(s.tests[0].welch.t, (200.0 - 600.0) / std::sqrt(10000.0 / 3 + 20000.0 / 2), 1e-12);
  EXPECT_FALSE(s.tests[1].computed);  // C has one successful run
  EXPECT_FALSE(s.tests[2].computed);
}

TEST(ExperimentConfigJson, DefaultsRoundTrip) {
  for (auto env : {EnvKind::Cartpole, EnvKind::Navsim}) {
    const auto c = default_experiment(env);
    const auto j = to_json(c);
    EXPECT_EQ(to_json(experiment_config_from_json(j)), j);
  }
}

TEST(ExperimentConfigJson, ModeSelectsReward) {
  const auto c = experiment_config_from_json({{"env", "navsim"}, {"algorithm", {{"mode", "IARL"}}}});
  EXPECT_EQ(c.reward.task_reward_kind, TaskRewardKind::IarlVariant);
  EXPECT_EQ(c.algorithm.beta, 0.1);
  EXPECT_EQ(c.model.kind, nn::ModelKind::Snail);
  const auto d = experiment_config_from_json({{"env", "CARTPOLE"}});
  EXPECT_EQ(d.reward.task_reward_kind, TaskRewardKind::ConstantOne);
}

namespace {
std::string config_error(const nlohmann::json& j) {
  try {
    experiment_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return {};
}
}  // namespace

TEST(ExperimentConfigJson, ErrorsNameTheField) {
  EXPECT_NE(config_error({{"episodz", 3}}).find("episodz"), std::string::npos);
  EXPECT_NE(config_error({{"runs", 0}}).find("runs"), std::string::npos);
  EXPECT_NE(config_error({{"episodes", -1}}).find("episodes"), std::string::npos);
  EXPECT_NE(config_error({{"model", {{"width", 3}}}}).find("model.width"), std::string::npos);
  EXPECT_NE(config_error({{"algorithm", {{"beta", 2.0}}}}).find("beta"), std::string::npos);
  EXPECT_NE(config_error({{"reward", {{"gamma", 0.5}}}}).find("reward.gamma"), std::string::npos);
  EXPECT_NE(config_error({{"env", "lunar"}}).find("env"), std::string::npos);
  EXPECT_NE(config_error({{"offline", true}}).find("dataset"), std::string::npos);
  EXPECT_NE(config_error({{"gate", {{"handback_margin", 1.5}}}}).find("gate.handback_margin"), std::string::npos);
  EXPECT_NE(config_error({{"port", "x"}}).find("port"), std::string::npos);
}

TEST(ModelSpecFromConfig, MatchesEnvironment) {
  const auto c = default_experiment(EnvKind::Navsim);
  const auto env = make_environment(c);
  const auto spec = make_model_spec(c, *env);
  EXPECT_EQ(spec.obs_dim, 18);
  EXPECT_EQ(spec.action_dim(), 2);
  EXPECT_EQ(spec.snail.obs_dim, 18);
  EXPECT_EQ(spec.snail.seq_len, 75);
  EXPECT_TRUE(spec.sequential());
}

TEST(RunSeeds, Spacing) {
  EXPECT_EQ(run_seed(7, 0), 7u);
  EXPECT_EQ(run_seed(7, 3), 7u + 3u * 10007u);
}

TEST(RunExperiment, ZeroEpisodesWriteHeaderOnly) {
  auto c = tiny_cartpole(temp_dir("zero"));
  c.episodes = 0;
  c.runs = 1;
  run_experiment(c);
  EXPECT_EQ(slurp(run_paths(c.out_dir, 0).metrics_csv), std::string(kMetricsHeader) + "\n");
  EXPECT_TRUE(std::filesystem::exists(run_paths(c.out_dir, 0).checkpoint_json));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.out_dir) / "config.json"));
}

TEST(RunExperiment, IdenticalConfigsGiveIdenticalCsv) {
  auto a = tiny_cartpole(temp_dir("det_a"));
  auto b = tiny_cartpole(temp_dir("det_b"));
  a.algorithm.seed = b.algorithm.seed = 5;
  run_experiment(a);
  run_experiment(b);
  for (int run = 0; run < 2; ++run) {
    const auto ca = slurp(run_paths(a.out_dir, run).metrics_csv);
    EXPECT_FALSE(ca.empty());
    EXPECT_EQ(ca, slurp(run_paths(b.out_dir, run).metrics_csv));
    EXPECT_EQ(slurp(run_paths(a.out_dir, run).dataset_jsonl), slurp(run_paths(b.out_dir, run).dataset_jsonl));
  }
  // Different runs use different seeds.
  EXPECT_NE(slurp(run_paths(a.out_dir, 0).dataset_jsonl), slurp(run_paths(a.out_dir, 1).dataset_jsonl));
}

TEST(RunExperiment, SupervisedStepsMatchDataset) {
  auto c = tiny_cartpole(temp_dir("sup"));
  c.runs = 1;
  c.episodes = 3;
  const auto result = run_experiment(c);
  const auto data = load_dataset(run_paths(c.out_dir, 0).dataset_jsonl);
  std::int64_t supervised = 0, steps = 0;
  for (const auto& t : data.transitions()) {
    supervised += t.f_demo;
    ++steps;
  }
  std::int64_t logged_steps = 0;
  for (const auto& r : result.runs[0].rows) logged_steps += r.steps;
  EXPECT_EQ(result.runs[0].total_supervised_steps(), supervised);
  EXPECT_EQ(logged_steps, steps);
  EXPECT_EQ(load_run_metrics(c.out_dir)[0], result.runs[0]);
}

TEST(RunExperiment, CheckpointRestoresEveryNetwork) {
  auto c = tiny_cartpole(temp_dir("ckpt"));
  c.runs = 1;
  c.episodes = 1;
  run_experiment(c);
  const auto path = run_paths(c.out_dir, 0).checkpoint_json;
  auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.config.algorithm.seed, c.algorithm.seed);
  EXPECT_GT(loaded.state.update_counter, 0);
  // Saving the restored state reproduces the file byte for byte.
  const auto again = temp_dir("ckpt_again") + ".json";
  save_checkpoint(again, loaded.config, loaded.state);
  EXPECT_EQ(slurp(again), slurp(path));
}

TEST(RunExperiment, CheckpointTopologyMismatch) {
  auto c = tiny_cartpole(temp_dir("ckpt_mismatch"));
  c.runs = 1;
  c.episodes = 0;
  run_experiment(c);
  auto j = nn::read_json_file(run_paths(c.out_dir, 0).checkpoint_json);
  auto env = make_environment(c);
  auto other = c;
  other.model.hidden = {16};
  auto s = train::make_train_state<float>(make_model_spec(other, *env), other.algorithm);
  try {
    train::restore_train_state(s, j["state"]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TopologyMismatch);
  }
}

TEST(RunExperiment, OfflineTrainsFromDatasetThenEvaluates) {
  auto online = tiny_cartpole(temp_dir("offline_src"));
  online.runs = 1;
  run_experiment(online);
  auto c = tiny_cartpole(temp_dir("offline"));
  c.runs = 1;
  c.offline = true;
  c.dataset = run_paths(online.out_dir, 0).dataset_jsonl;
  c.algorithm.mode = train::Mode::OnlyBc;
  c.offline_epochs = 1;
  c.eval_episodes = 2;
  const auto r = run_experiment(c);
  ASSERT_EQ(r.runs[0].rows.size(), 2u);
}

TEST(RunExperiment, StatsLoaderNeedsRuns) { EXPECT_THROW(load_run_metrics(temp_dir("none")), Error); }

// Shipped sample configs parse and build their environments. Scene paths are
// relative to the repository root.
TEST(ShippedConfigs, ParseAndBuildEnvironment) {
  const fs::path root = REIL_SOURCE_DIR;
  const auto saved = fs::current_path();
  fs::current_path(root);
  int count = 0;
  for (const auto& e : fs::directory_iterator(root / "configs")) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().string());
    const auto cfg = load_experiment_config(e.path().string());
    EXPECT_NO_THROW(make_environment(cfg));
    ++count;
  }
  fs::current_path(saved);
  EXPECT_GE(count, 5);
}

TEST(ShippedConfigs, SceneFilesRoundTrip) {
  for (const auto& e : fs::directory_iterator(fs::path(REIL_SOURCE_DIR) / "configs" / "scenes")) {
    SCOPED_TRACE(e.path().string());
    const auto s = envs::load_scene(e.path().string());
    EXPECT_EQ(envs::scene_from_json(envs::scene_to_json(s)), s);
  }
}
