#include <gtest/gtest.h>

#include "esmr/bench.hpp"
#include "testing.hpp"
#include "world.hpp"

using namespace esmr;

namespace {

using UE = UserEmotion;

std::vector<UE> repeat(UE e, int n) { return std::vector<UE>(static_cast<std::size_t>(n), e); }

UserTrajectory trajectory_of(std::vector<UE> labels) {
  UserTrajectory t;
  t.labels = std::move(labels);
  t.r_eng.assign(t.labels.size(), 0.0);
  t.r_cause.assign(t.labels.size(), 0.0);
  return t;
}

std::vector<StepLog> logs_for(int user, const std::vector<UE>& labels) {
  std::vector<StepLog> out;
  for (std::size_t d = 0; d < labels.size(); ++d) {
    StepLog s;
    s.user = user;
    s.day = static_cast<int>(d) + 1;
    s.emotion = labels[d];
    if (labels[d] != UE::kChurned) {
      s.policy = PolicyKind::kScorer;
      s.reward = combine_reward(0.5, 0.0, 0.1, false, RewardWeights{});
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Metrics, AllHappy) {
  const auto m = user_metrics(trajectory_of(repeat(UE::kHappy, 30)));
  EXPECT_EQ(m.negative_days, 0);
  EXPECT_EQ(m.volatility, 0.0);
  EXPECT_EQ(m.bounce_events, 0);
  EXPECT_EQ(m.recovery_time, 0);
  EXPECT_EQ(m.mean_valence, 1.0);
}

TEST(Metrics, AlternatingUserBounces) {
  std::vector<UE> labels;
  for (int d = 0; d < 30; ++d) labels.push_back(d % 2 == 0 ? UE::kExcited : UE::kStressed);
  const auto m = user_metrics(trajectory_of(labels));
  EXPECT_EQ(m.bounce_events, 29);
  EXPECT_NEAR(m.volatility, 1.0, 1e-12);
  const std::vector<UserMetrics> one = {m};
  EXPECT_EQ(aggregate_metrics(one).bounce_rate, 1.0);
}

TEST(Metrics, RecoveryAfterFiveBadDays) {
  auto labels = repeat(UE::kStressed, 5);
  const auto happy = repeat(UE::kHappy, 25);
  labels.insert(labels.end(), happy.begin(), happy.end());
  EXPECT_EQ(recovery_time(labels), 5);
  EXPECT_EQ(recovery_time(repeat(UE::kStressed, 30)), 30);
  EXPECT_EQ(recovery_time(std::vector<UE>{UE::kHappy, UE::kHappy, UE::kStressed}), 3);
}

TEST(Metrics, VolatilityIgnoresChurnedDays) {
  const std::vector<UE> labels = {UE::kHappy, UE::kChurned, UE::kHappy, UE::kChurned};
  EXPECT_EQ(emotion_volatility(labels), 0.0);
  EXPECT_EQ(emotion_volatility(repeat(UE::kChurned, 5)), 0.0);
}

TEST(Metrics, VolatilityOracle) {
  oracle::Cases gen(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<UE> labels;
    std::vector<double> v;
    for (int d = 0; d < 30; ++d) {
      const UE e = kAllUserEmotions[static_cast<std::size_t>(gen.integer(0, 5))];
      labels.push_back(e);
      if (e != UE::kChurned) v.push_back(is_positive(e) ? 1.0 : -1.0);
    }
    const double n = static_cast<double>(v.size());
    const double oracle = v.size() > 1 ? std::sqrt(oracle::variance(v) * (n - 1.0) / n) : 0.0;
    EXPECT_NEAR(emotion_volatility(labels), oracle, 1e-12);
  }
}

TEST(Metrics, BounceCountsOnlyHighIntensitySwings) {
  EXPECT_EQ(bounce_events(std::vector<UE>{UE::kHappy, UE::kDisappointed, UE::kHappy}), 0);
  EXPECT_EQ(bounce_events(std::vector<UE>{UE::kHappy, UE::kFrustrated, UE::kExcited}), 2);
  EXPECT_EQ(bounce_events(std::vector<UE>{UE::kHappy, UE::kChurned, UE::kStressed}), 0);
}

TEST(Metrics, EmptyUserSet) {
  const RunMetrics r = compute_metrics(std::vector<StepLog>{}, 30);
  EXPECT_EQ(r.users, 0u);
  EXPECT_EQ(r.bounce_rate, 0.0);
  const std::vector<VariantResult> none;
  EXPECT_EQ(metrics_csv(none).find('\n'), metrics_csv(none).size() - 1);  // header only
  EXPECT_FALSE(report_markdown(none, "empty").empty());
}

TEST(Metrics, PooledValenceWeightsByActiveDays) {
  auto logs = logs_for(0, repeat(UE::kHappy, 10));
  auto second = logs_for(1, {UE::kStressed, UE::kChurned, UE::kChurned, UE::kChurned, UE::kChurned,
                             UE::kChurned, UE::kChurned, UE::kChurned, UE::kChurned, UE::kChurned});
  logs.insert(logs.end(), second.begin(), second.end());
  const RunMetrics r = compute_metrics(logs, 10);
  EXPECT_NEAR(r.mean_valence, (10.0 - 1.0) / 11.0, 1e-12);
  EXPECT_NEAR(r.negative_emotion_days, 0.5, 1e-12);
  EXPECT_NEAR(r.mean_engagement_reward, (0.5 + 0.05) / 2.0, 1e-12);
}

TEST(Metrics, IncompleteLogsAreAnError) {
  auto logs = logs_for(0, repeat(UE::kHappy, 10));
  logs.pop_back();
  EXPECT_THROW(compute_metrics(logs, 10), Error);
  auto dup = logs_for(0, repeat(UE::kHappy, 10));
  dup.push_back(dup.front());
  EXPECT_THROW(compute_metrics(dup, 10), Error);
}

TEST(Metrics, RecomputedFromPersistedLogs) {
  const auto w = oracle::smoke_world(5);
  const EpisodeEnv env = w->env();
  const auto logs = evaluate_policy(env, w->users, QTable{}, 5);
  std::string text;
  for (const auto& s : logs) text += step_log_jsonl(s) + "\n";
  const auto back = step_logs_from_jsonl(text);
  ASSERT_EQ(back.size(), logs.size());
  for (const auto& s : back) EXPECT_EQ(s.reward.total, s.reward.recompute());
  const RunMetrics a = compute_metrics(logs, env.days);
  const RunMetrics b = compute_metrics(back, env.days);
  EXPECT_EQ(a.mean_valence, b.mean_valence);
  EXPECT_EQ(a.negative_emotion_days, b.negative_emotion_days);
  EXPECT_EQ(a.volatility, b.volatility);
  EXPECT_EQ(a.bounce_rate, b.bounce_rate);
  EXPECT_EQ(a.recovery_time_days, b.recovery_time_days);
  EXPECT_EQ(a.mean_engagement_reward, b.mean_engagement_reward);
  EXPECT_EQ(a.cumulative_causal_bonus, b.cumulative_causal_bonus);
}

TEST(Ablation, VariantsShareTheSimulation) {
  const auto w = oracle::smoke_world(6);
  EpisodeEnv env = w->env();
  env.config.epochs = 2;
  const auto variants = default_variants(env.config.reward);
  ASSERT_EQ(variants.size(), 4u);
  EXPECT_EQ(variants[0].name, "full");
  EXPECT_EQ(variants[1].weights.alpha_emo, 0.0);
  EXPECT_EQ(variants[2].weights.engagement, 0.0);
  EXPECT_FALSE(variants[3].agent_enabled);
  const auto results = run_ablation(env, variants, w->users, 6, 1);
  ASSERT_EQ(results.size(), 4u);
  // Until a user first becomes vulnerable every variant serves the scorer's
  // slate, so the first day's emotions agree across variants.
  for (std::size_t v = 1; v < results.size(); ++v) {
    ASSERT_EQ(results[v].logs.size(), results[0].logs.size());
    for (std::size_t i = 0; i < results[0].logs.size(); ++i) {
      if (results[0].logs[i].day == 1) EXPECT_EQ(results[v].logs[i].emotion, results[0].logs[i].emotion);
    }
  }
  EXPECT_TRUE(results[3].training.empty());
  const std::string csv = ablation_csv(results);
  EXPECT_NE(csv.find("emotion_off"), std::string::npos);
}
