#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles/flags_pairwise.hpp"
#include "support/episodes.hpp"
#include "reil/core/dataset.hpp"
#include "reil/core/flags.hpp"

using namespace reil;

namespace {

using support::make_episode;

std::vector<int> column(const Episode& e, int which) { return support::flag_column(e, which); }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(GatingFlags, InterventionOnset) {
  auto e = compute_gating_flags(make_episode({0, 0, 1, 1, 0}));
  EXPECT_EQ(column(e, 0), (std::vector<int>{0, 1, 0, 0, 0}));
}

TEST(GatingFlags, TaskTerminal) {
  auto e = compute_gating_flags(make_episode({0, 0, 0}, 2));
  EXPECT_EQ(column(e, 0), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(column(e, 1), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(column(e, 2), (std::vector<int>{0, 0, 1}));
}

TEST(GatingFlags, MatchesPairwiseOracle) {
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution coin(0.4);
  for (int k = 0; k < 200; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 30)(rng);
    std::vector<int> f(n), term(n, 0);
    for (auto& v : f) v = coin(rng);
    term[n - 1] = coin(rng);
    auto e = compute_gating_flags(make_episode(f, term[n - 1] ? n - 1 : -1));
    auto ref = oracle::pairwise_flags(f, term);
    ASSERT_EQ(column(e, 0), ref.intervention);
    ASSERT_EQ(column(e, 1), ref.task);
    ASSERT_EQ(column(e, 2), ref.mix);
  }
}

TEST(GatingFlags, EmptyEpisode) {
  try {
    compute_gating_flags(Episode{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyEpisode);
  }
}

TEST(GatingFlags, EndingMidInterventionHasNoOnset) {
  auto e = compute_gating_flags(make_episode({0, 1, 1}, 2));
  EXPECT_EQ(column(e, 0), (std::vector<int>{1, 0, 0}));
}

TEST(Reward, ConstantOneAtIntervention) {
  auto spec = RewardSpec::constant_one();
  auto e = finalize_episode(make_episode({0, 1}, 1), spec);
  EXPECT_EQ(e.transitions[0].flags->intervention, 1);
  EXPECT_EQ(compute_reward(0, e, spec), 1.0);
}

TEST(Reward, EpisodicSuccessStep) {
  auto spec = RewardSpec::episodic_universal(0.95);
  auto e = make_episode({0, 0, 0}, 2);
  e.terminal_kind = TerminalKind::TaskSuccess;
  e = finalize_episode(e, spec);
  EXPECT_NEAR(compute_reward(2, e, spec), 40.0, 1e-12);  // 1 - 0.95 is inexact in binary
  EXPECT_DOUBLE_EQ(compute_reward(1, e, spec), 1.0);
}

TEST(Reward, IarlVariant) {
  auto spec = RewardSpec::iarl();
  auto e = finalize_episode(make_episode({0, 1, 0}, 2), spec);
  EXPECT_EQ(compute_reward(1, e, spec), 0.0);
  EXPECT_EQ(compute_reward(0, e, spec), 1.0);
  // No bootstrapping cut on an intervention onset.
  EXPECT_EQ(e.transitions[0].flags->intervention, 0);
  EXPECT_EQ(e.transitions[0].flags->mix, 0);
}

TEST(Reward, GateAlwaysPaysRInt) {
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.5);
  for (auto spec : {RewardSpec::constant_one(0.99), RewardSpec::episodic_universal(0.95),
                    RewardSpec(-3.0, 0.9, TaskRewardKind::ConstantOne, 1.0)}) {
    for (int k = 0; k < 50; ++k) {
      std::vector<int> f(20);
      for (auto& v : f) v = coin(rng);
      auto e = make_episode(f, 19);
      e.terminal_kind = coin(rng) ? TerminalKind::TaskSuccess : TerminalKind::TimeLimit;
      e = finalize_episode(e, spec);
      for (const auto& t : e.transitions) {
        if (t.flags->intervention == 1) ASSERT_EQ(t.reward, spec.r_int);
      }
    }
  }
}

TEST(Reward, FlagsUnset) {
  auto e = make_episode({0, 0});
  try {
    compute_reward(0, e, RewardSpec::constant_one());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::FlagsUnset);
  }
}

TEST(ValidateRInt, Examples) {
  EXPECT_EQ(validate_r_int(1, 1, 0.99), RIntCheck::Ok);
  EXPECT_EQ(validate_r_int(0, 1, 0.95), RIntCheck::Ok);
  EXPECT_EQ(validate_r_int(100, 1, 0.99), RIntCheck::Violation);
  EXPECT_EQ(validate_r_int(20, 1, 0.95), RIntCheck::Violation);
  EXPECT_EQ(validate_r_int(19.999, 1, 0.95), RIntCheck::Ok);
}

TEST(ValidateRInt, BadGamma) {
  for (double g : {1.0, -0.1, 1.5}) {
    try {
      validate_r_int(0, 1, g);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidGamma);
    }
  }
}

TEST(ValidateRInt, SpecConstructionRejectsViolation) {
  EXPECT_THROW(RewardSpec(100.0, 0.99, TaskRewardKind::ConstantOne, 1.0), Error);
  EXPECT_NO_THROW(RewardSpec(1000.0, 0.99, TaskRewardKind::IarlVariant, 1.0));
}

TEST(EpisodeBuilder, StreamingMatchesBatchFinalization) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.3);
  auto spec = RewardSpec::episodic_universal(0.95);
  for (int k = 0; k < 100; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 25)(rng);
    std::vector<int> f(n);
    for (auto& v : f) v = coin(rng);
    f[n - 1] = 0;
    auto raw = make_episode(f, n - 1, 3);
    raw.terminal_kind = coin(rng) ? TerminalKind::TaskSuccess : TerminalKind::TaskFailure;
    auto expected = finalize_episode(raw, spec);

    EpisodeBuilder b(3, spec);
    std::vector<Transition> streamed;
    for (auto t : raw.transitions) {
      t.env_terminal = false;
      if (auto done = b.append(t)) streamed.push_back(*done);
    }
    streamed.push_back(b.finish(raw.terminal_kind));
    ASSERT_EQ(streamed, expected.transitions);
  }
}

TEST(EpisodeBuilder, TimeLimitDuringIntervention) {
  EpisodeBuilder b(0, RewardSpec::constant_one());
  Transition t;
  t.f_demo = 1;
  b.append(t);
  auto last = b.finish(TerminalKind::TimeLimit);
  EXPECT_EQ(*last.terminal_kind, TerminalKind::InterventionOngoingAtEnd);
  EXPECT_EQ(last.flags->intervention, 0);
}

TEST(ReplayMemory, CountsAndEviction) {
  auto spec = RewardSpec::constant_one();
  ReplayMemory m(10, 1);
  m.push_episode(finalize_episode(make_episode({0, 0, 0}, 2, 0), spec));
  EXPECT_EQ(m.size(), 3u);
  ReplayMemory small(5, 1);
  small.push_episode(finalize_episode(make_episode({0, 0, 0}, 2, 0), spec));
  small.push_episode(finalize_episode(make_episode({0, 1, 0}, 2, 1), spec));
  EXPECT_EQ(small.size(), 5u);
  EXPECT_EQ(small[0].episode_id, 0);
  EXPECT_EQ(small[0].step_index, 1);
  EXPECT_EQ(small.episode_spans().size(), 2u);
}

TEST(ReplayMemory, ZeroCapacity) {
  try {
    ReplayMemory m(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidCapacity);
  }
}

TEST(ReplayMemory, SeededSamplingRepeats) {
  auto spec = RewardSpec::constant_one();
  auto fill = [&] {
    ReplayMemory m(100, 42);
    for (int id = 0; id < 4; ++id) m.push_episode(finalize_episode(make_episode({0, 0, 1, 0, 0}, 4, id), spec));
    return m;
  };
  auto a = fill(), b = fill();
  auto sa = a.sample(16), sb = b.sample(16);
  ASSERT_EQ(sa.size(), 16u);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].transition, sb[i].transition);
    EXPECT_EQ(sa[i].successor.has_value(), sb[i].successor.has_value());
  }
}

TEST(ReplayMemory, FinalStepHasNoSuccessorAndMixIsSet) {
  auto spec = RewardSpec::constant_one();
  ReplayMemory m(100, 3);
  m.push_episode(finalize_episode(make_episode({0, 1, 0}, 2, 0), spec));
  m.push_episode(finalize_episode(make_episode({0, 0}, 1, 1), spec));
  for (const auto& s : m.sample(200)) {
    if (!s.successor) EXPECT_EQ(s.transition.flags->mix, 1);
  }
}

TEST(ReplayMemory, UnfinishedTailIsNotSampled) {
  ReplayMemory m(10, 0);
  Transition t;
  t.flags = GatingFlags{};
  m.push(t);
  EXPECT_EQ(m.sampleable_count(), 0u);
  try {
    m.sample(1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBatch);
  }
}

TEST(ReplayMemory, SupervisedSampling) {
  auto spec = RewardSpec::constant_one();
  ReplayMemory m(100, 5);
  m.push_episode(finalize_episode(make_episode({0, 0, 0}, 2, 0), spec));
  try {
    m.sample_supervised(4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSupervisorData);
  }
  m.push_episode(finalize_episode(make_episode({0, 1, 1, 0}, 3, 1), spec));
  for (const auto& s : m.sample_supervised(50)) EXPECT_EQ(s.transition.f_demo, 1);
}

TEST(Dataset, EmptyRoundTrip) {
  const auto path = temp_path("reil_empty.jsonl");
  save_dataset(ReplayMemory(4), path);
  EXPECT_EQ(load_dataset(path).size(), 0u);
  std::filesystem::remove(path);
}

TEST(Dataset, RandomRoundTripIsExact) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 3.0);
  std::bernoulli_distribution coin(0.3);
  ReplayMemory m(1000, 0);
  int total = 0;
  for (std::int64_t id = 0; total < 100; ++id) {
    const int len = std::min(std::uniform_int_distribution<int>(1, 12)(rng), 100 - total);
    std::vector<int> f(len);
    for (auto& v : f) v = coin(rng);
    auto e = make_episode(f, len - 1, id);
    for (auto& t : e.transitions) {
      for (auto& o : t.obs) o = n(rng);
      for (auto& a : t.action) a = n(rng) * 1e-7;
      t.f_tf_s = coin(rng);
    }
    e.terminal_kind = TerminalKind::TaskFailure;
    m.push_episode(finalize_episode(e, RewardSpec(-0.123456789, 0.9, TaskRewardKind::ConstantOne, 1.0)));
    total += len;
  }
  const auto path = temp_path("reil_rand.jsonl");
  save_dataset(m, path);
  auto back = load_dataset(path);
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(back[i], m[i]) << "row " << i;
  EXPECT_EQ(episodes_of(back), episodes_of(m));
  std::filesystem::remove(path);
}

TEST(Dataset, TruncatedRecordNamesLine) {
  const auto path = temp_path("reil_bad.jsonl");
  ReplayMemory m(10);
  m.push_episode(finalize_episode(make_episode({0, 0}, 1), RewardSpec::constant_one()));
  save_dataset(m, path);
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"episode_id":1,"step_index":0,"obs":[1.0)" << '\n';
  }
  try {
    load_dataset(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}
