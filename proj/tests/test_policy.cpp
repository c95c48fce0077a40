#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "esmr/io.hpp"
#include "esmr/policy.hpp"
#include "testing.hpp"
#include "world.hpp"

using namespace esmr;

namespace {

using UE = UserEmotion;

const oracle::World& world() {
  static const auto w = oracle::smoke_world(3);
  return *w;
}

RewardTarget single_parent(const std::string& feature, double weight, double scale, double sign = 1.0) {
  RewardTarget t;
  t.parents.target = "next_day_happy";
  t.parents.parents.push_back(CausalParent{feature, weight, weight, scale});
  t.sign = sign;
  return t;
}

std::size_t feature_index(std::string_view name) {
  return static_cast<std::size_t>(std::find(kCausalFeatureNames.begin(), kCausalFeatureNames.end(), name) -
                                  kCausalFeatureNames.begin());
}

}  // namespace

// ---- reward ----

TEST(Reward, WorkedExample) {
  RewardWeights w;
  w.eta = 1.0;
  w.alpha_emo = 1.0;
  w.beta = 0.5;
  const RewardBreakdown b = combine_reward(0.5, w.eta, 0.2, false, w);
  EXPECT_NEAR(b.total, 1.6, 1e-12);
  EXPECT_EQ(b.total, b.recompute());
}

TEST(Reward, WorkedExampleFromAnOutcome) {
  RewardOutcome o;
  o.tau = 2.0;
  o.engagement = 2.0 * std::atanh(0.5);
  o.previous = UE::kStressed;
  o.current = UE::kHappy;
  o.previous_features = std::array<double, kCausalFeatureCount>{};
  o.features[feature_index("watch_rel")] = 0.2;
  const std::vector<RewardTarget> targets = {single_parent("watch_rel", 1.0, 1.0)};
  const RewardBreakdown b = compute_reward(o, targets, false, RewardWeights{});
  EXPECT_NEAR(b.r_eng, 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(b.r_emo, 1.0);
  EXPECT_NEAR(b.r_cause, 0.2, 1e-12);
  EXPECT_NEAR(b.total, 1.6, 1e-12);
}

TEST(Reward, NoImprovementNoBonus) {
  RewardOutcome o;
  o.engagement = 1.0;
  for (auto [prev, cur] : std::vector<std::pair<UE, UE>>{
           {UE::kHappy, UE::kHappy}, {UE::kHappy, UE::kStressed}, {UE::kStressed, UE::kFrustrated},
           {UE::kChurned, UE::kHappy}}) {
    o.previous = prev;
    o.current = cur;
    EXPECT_DOUBLE_EQ(compute_reward(o, {}, false, RewardWeights{}).r_emo, 0.0);
  }
  o.previous.reset();
  o.current = UE::kHappy;
  EXPECT_DOUBLE_EQ(compute_reward(o, {}, false, RewardWeights{}).r_emo, 0.0);
}

TEST(Reward, VulnerabilityDoublesOnlyTheCausalTerm) {
  const RewardWeights w;
  oracle::Cases gen(1);
  for (int i = 0; i < 200; ++i) {
    const double e = gen.real(-1, 1), m = gen.coin() ? 1.0 : 0.0, c = gen.real(-1, 1);
    const auto calm = combine_reward(e, m, c, false, w);
    const auto hot = combine_reward(e, m, c, true, w);
    EXPECT_DOUBLE_EQ(hot.beta_effective(), 2.0 * calm.beta_effective());
    EXPECT_NEAR(hot.total - calm.total, w.beta * c, 1e-12);
  }
}

TEST(Reward, EngagementTermIsBoundedTanh) {
  oracle::Cases gen(2);
  for (int i = 0; i < 200; ++i) {
    const double e = gen.real(0.0, 50.0), tau = gen.real(0.1, 5.0);
    const double r = engagement_reward(e, tau);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_NEAR(r, std::tanh(e / tau), 1e-15);
  }
  EXPECT_THROW(engagement_reward(1.0, 0.0), Error);
}

TEST(Reward, CausalBonusOracle) {
  oracle::Cases gen(3);
  for (int i = 0; i < 200; ++i) {
    RewardOutcome o;
    std::array<double, kCausalFeatureCount> prev{};
    for (auto& v : prev) v = gen.real(-2, 2);
    for (auto& v : o.features) v = gen.real(-2, 2);
    o.previous_features = prev;
    const double w1 = gen.real(-1, 1), s1 = gen.real(0.5, 3), w2 = gen.real(-1, 1), s2 = gen.real(0.5, 3);
    const std::vector<RewardTarget> targets = {single_parent("logins", w1, s1, 1.0),
                                               single_parent("skip_rate", w2, s2, -1.0)};
    const std::size_t a = feature_index("logins"), b = feature_index("skip_rate");
    const double oracle =
        0.5 * (w1 * (o.features[a] - prev[a]) / s1 - w2 * (o.features[b] - prev[b]) / s2);
    EXPECT_NEAR(causal_bonus(o, targets), oracle, 1e-12);
  }
}

TEST(Reward, MissingParentFeatureIsAnError) {
  RewardOutcome o;
  const std::vector<RewardTarget> targets = {single_parent("not_a_feature", 1.0, 1.0)};
  EXPECT_THROW(causal_bonus(o, targets), Error);
}

TEST(Reward, NoPreviousDayNoCausalBonus) {
  RewardOutcome o;
  o.features.fill(3.0);
  const std::vector<RewardTarget> targets = {single_parent("logins", 1.0, 1.0)};
  EXPECT_DOUBLE_EQ(causal_bonus(o, targets), 0.0);
}

// ---- Q-learning ----

TEST(QLearning, FirstUpdate) {
  QTable t;
  q_update(t, 5, 7, 1.0, 9, 0.1, 0.95);
  EXPECT_NEAR(t.q(5, 7), 0.1, 1e-12);
}

TEST(QLearning, FixedPoint) {
  QTable t;
  t.q(2, 3) = 0.7;
  q_update(t, 2, 3, 0.7, -1, 0.1, 0.95);
  EXPECT_DOUBLE_EQ(t.q(2, 3), 0.7);
  q_update(t, 2, 3, 0.7, 4, 0.1, 0.95);  // max Q(4, .) = 0
  EXPECT_DOUBLE_EQ(t.q(2, 3), 0.7);
}

TEST(QLearning, GeometricChain) {
  QTable t(1, 1);
  for (int i = 0; i < 500; ++i) q_update(t, 0, 0, 1.0, 0, 0.5, 0.9);
  EXPECT_NEAR(t.q(0, 0), 1.0 / (1.0 - 0.9), 1e-3);
}

TEST(QLearning, CsvRoundTrip) {
  QTable t;
  oracle::Cases gen(4);
  for (int i = 0; i < 500; ++i) {
    const int s = gen.integer(0, kStateCount - 1), a = gen.integer(0, kActions - 1);
    t.q(s, a) = gen.real(-3, 3);
    t.visit(s, a);
  }
  const QTable back = QTable::from_csv(t.to_csv());
  for (int s = 0; s < kStateCount; ++s) {
    for (int a = 0; a < kActions; ++a) {
      ASSERT_EQ(back.q(s, a), t.q(s, a));
      ASSERT_EQ(back.visits(s, a), t.visits(s, a));
    }
  }
}

TEST(Boltzmann, EqualValuesAreUniform) {
  QTable t;
  Rng rng(5);
  std::vector<double> counts(kActions, 0.0);
  for (int i = 0; i < 10000; ++i) counts[static_cast<std::size_t>(boltzmann_select(t, 0, 1.0, rng))] += 1.0;
  const std::vector<double> expected(kActions, 10000.0 / kActions);
  EXPECT_GT(oracle::chi_square_p(counts, expected), 0.01);
}

TEST(Boltzmann, ColdIsGreedy) {
  QTable t;
  t.q(0, 11) = 0.3;
  t.q(0, 4) = 0.2;
  Rng rng(6);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += boltzmann_select(t, 0, 1e-6, rng) == 11 ? 1 : 0;
  EXPECT_GE(hits / 10000.0, 0.999);
}

TEST(Boltzmann, EntropyFallsAsTemperatureFalls) {
  QTable t;
  oracle::Cases gen(7);
  for (int a = 0; a < kActions; ++a) t.q(0, a) = gen.real(-1, 1);
  double previous = std::log(static_cast<double>(kActions)) + 1e-12;
  for (double temp : {10.0, 1.0, 0.3, 0.1, 0.01}) {
    const auto p = boltzmann_probabilities(t, 0, temp);
    const double h = oracle::entropy(p);
    EXPECT_LT(h, previous);
    previous = h;
  }
  EXPECT_THROW(boltzmann_probabilities(t, 0, 0.0), Error);
}

TEST(Boltzmann, ProbabilitiesOracle) {
  QTable t;
  oracle::Cases gen(8);
  for (int a = 0; a < kActions; ++a) t.q(3, a) = gen.real(-5, 5);
  const auto p = boltzmann_probabilities(t, 3, 0.7);
  double z = 0.0;
  for (int a = 0; a < kActions; ++a) z += std::exp(t.q(3, a) / 0.7);
  for (int a = 0; a < kActions; ++a) EXPECT_NEAR(p[static_cast<std::size_t>(a)], std::exp(t.q(3, a) / 0.7) / z, 1e-12);
}

TEST(Replay, EvictsOldestFirst) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(Transition{i, 0, 0.0, -1});
  const auto items = buf.contents();
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].s, 2);
  EXPECT_EQ(items[1].s, 3);
  EXPECT_EQ(items[2].s, 4);
}

TEST(Replay, SampleIsDistinctAndBounded) {
  ReplayBuffer buf(50);
  for (int i = 0; i < 20; ++i) buf.push(Transition{i, 0, 0.0, -1});
  Rng rng(9);
  const auto small = buf.sample(8, rng);
  std::set<int> seen;
  for (const auto& t : small) seen.insert(t.s);
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_EQ(buf.sample(64, rng).size(), 20u);
  EXPECT_THROW(ReplayBuffer(0), Error);
}

// ---- state, switching ----

TEST(State, IndexRoundTrip) {
  for (int i = 0; i < kStateCount; ++i) EXPECT_EQ(PolicyState::from_index(i).index(), i);
  EXPECT_THROW(PolicyState::from_index(kStateCount), Error);
  for (int a = 0; a < kActions; ++a) EXPECT_EQ(ActionKey::from_index(a).index(), a);
}

TEST(State, StreakBuckets) {
  const EngagementTertiles tert{1.0, 2.0};
  std::vector<DayOutcome> h;
  EXPECT_EQ(encode_state(h, tert).index(), PolicyState{}.index());
  for (UE e : {UE::kHappy, UE::kStressed, UE::kDisappointed, UE::kFrustrated}) {
    DayOutcome d;
    d.churned = false;
    d.label = e;
    d.engagement = 1.5;
    d.dominant_category = 2;
    h.push_back(d);
  }
  const PolicyState s = encode_state(h, tert);
  EXPECT_EQ(s.emotion, UE::kFrustrated);
  EXPECT_EQ(s.streak_bucket, 2);
  EXPECT_EQ(s.engagement_tertile, 1);
  EXPECT_EQ(s.last_category, 2);
  h.pop_back();
  EXPECT_EQ(encode_state(h, tert).streak_bucket, 1);
}

TEST(Switching, VulnerabilityExamples) {
  EXPECT_TRUE(is_vulnerable(std::vector<UE>{UE::kStressed, UE::kStressed, UE::kStressed}));
  EXPECT_FALSE(is_vulnerable(std::vector<UE>{UE::kStressed, UE::kHappy, UE::kStressed}));
  EXPECT_FALSE(is_vulnerable(std::vector<UE>{UE::kStressed, UE::kStressed}));
  EXPECT_TRUE(is_vulnerable(std::vector<UE>{UE::kHappy, UE::kDisappointed, UE::kFrustrated, UE::kStressed}));
  EXPECT_FALSE(is_vulnerable(std::vector<UE>{UE::kStressed, UE::kChurned, UE::kStressed, UE::kStressed}));
}

TEST(Switching, NoHysteresis) {
  std::vector<UE> traj;
  EXPECT_EQ(select_policy(traj), PolicyKind::kScorer);
  traj = {UE::kStressed, UE::kDisappointed, UE::kStressed};
  EXPECT_EQ(select_policy(traj), PolicyKind::kAgent);
  traj.push_back(UE::kHappy);
  EXPECT_EQ(select_policy(traj), PolicyKind::kScorer);
}

// ---- scorer ----

TEST(Scorer, UntrainedScorerBreaksTiesById) {
  const EngagementScorer flat;
  Catalog c = generate_catalog(20, 1);
  std::reverse(c.begin(), c.end());
  const auto ranked = rank_candidates(flat, ScorerContext{}, c);
  for (std::size_t i = 0; i < ranked.size(); ++i) EXPECT_EQ(ranked[i], static_cast<int>(i));
}

TEST(Scorer, OneCandidateIsTop) {
  const EngagementScorer flat;
  const Catalog c = generate_catalog(1, 2);
  EXPECT_EQ(rank_candidates(flat, ScorerContext{}, c), std::vector<int>{0});
  EXPECT_THROW(rank_candidates(flat, ScorerContext{}, Catalog{}), Error);
}

TEST(Scorer, TrainedRankingIsDescendingAndDeterministic) {
  const auto& w = world();
  const ScorerContext ctx{Tier::kEngaged, 1, 2};
  const auto& ranked = w.rankings->ranking(ctx);
  ASSERT_EQ(ranked.size(), w.catalog.size());
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    const double a = w.scorer.predict(w.catalog[static_cast<std::size_t>(ranked[i - 1])], ctx);
    const double b = w.scorer.predict(w.catalog[static_cast<std::size_t>(ranked[i])], ctx);
    EXPECT_TRUE(a > b || (a == b && ranked[i - 1] < ranked[i]));
  }
  const EngagementScorer back = EngagementScorer::from_json(w.scorer.to_json());
  EXPECT_EQ(rank_candidates(back, ctx, w.catalog), ranked);
}

TEST(Actions, ResolveFillsFromTheKeyPoolFirst) {
  const auto& w = world();
  const auto& ranking = w.rankings->ranking(ScorerContext{});
  UserSimState state(w.users[0], w.catalog.size(), Rng(1));
  for (int a = 0; a < kActions; ++a) {
    const ActionKey key = ActionKey::from_index(a);
    const auto out = resolve_action(key, ranking, w.catalog, state, 1, 6, 5);
    EXPECT_EQ(out.size(), 6u);
    EXPECT_EQ(std::set<int>(out.begin(), out.end()).size(), out.size());
    std::size_t exact = 0;
    for (const auto& v : w.catalog) exact += v.category == key.category && v.emotion == key.emotion ? 1 : 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(exact, 6); ++i) {
      const VideoItem& v = w.catalog[static_cast<std::size_t>(out[i])];
      EXPECT_EQ(v.category, key.category);
      EXPECT_EQ(v.emotion, key.emotion);
    }
  }
}

TEST(Actions, RecentVideosAreSkipped) {
  const auto& w = world();
  const auto& ranking = w.rankings->ranking(ScorerContext{});
  UserSimState state(w.users[0], w.catalog.size(), Rng(1));
  for (std::size_t i = 0; i < 10; ++i) state.last_seen_day[static_cast<std::size_t>(ranking[i])] = 4;
  const auto slate = scorer_slate(ranking, state, 6, 5, 5);
  ASSERT_EQ(slate.size(), 5u);
  EXPECT_EQ(slate[0], ranking[10]);
  const auto later = scorer_slate(ranking, state, 10, 5, 5);
  EXPECT_EQ(later[0], ranking[0]);
}

// ---- episodes ----

TEST(Episodes, ZeroEpochsLeaveTableEmpty) {
  const auto& w = world();
  EpisodeEnv env = w.env();
  env.config.epochs = 0;
  const AgentTraining t = train_agent(env, w.users, 1);
  EXPECT_TRUE(t.logs.empty());
  EXPECT_TRUE(t.epochs.empty());
  EXPECT_EQ(t.table.max_abs(), 0.0);
}

TEST(Episodes, RewardDecomposesOnEveryStep) {
  const auto& w = world();
  EpisodeEnv env = w.env();
  env.config.epochs = 2;
  const AgentTraining t = train_agent(env, w.users, 2);
  ASSERT_EQ(t.epochs.size(), 2u);
  const auto logs = evaluate_policy(env, w.users, t.table, 2);
  ASSERT_EQ(logs.size(), w.users.size() * static_cast<std::size_t>(env.days));
  for (const auto& s : logs) {
    EXPECT_EQ(s.reward.total, s.reward.recompute());
    if (!s.policy) {
      EXPECT_EQ(s.emotion, UE::kChurned);
      EXPECT_EQ(s.reward.total, 0.0);
    }
  }
  for (const auto& e : t.epochs) {
    EXPECT_NEAR(e.temperature, env.config.temperature * std::pow(env.config.temperature_decay, e.epoch), 1e-12);
  }
}

TEST(Episodes, AgentOnlyActsWhenVulnerable) {
  const auto& w = world();
  const EpisodeEnv env = w.env();
  const auto logs = evaluate_policy(env, w.users, QTable{}, 3);
  std::map<int, std::vector<UE>> history;
  for (const auto& s : logs) {
    auto& h = history[s.user];
    if (s.policy) EXPECT_EQ(*s.policy == PolicyKind::kAgent, is_vulnerable(h, env.config.vulnerable_streak));
    h.push_back(s.emotion);
  }
}

TEST(Episodes, EvaluationIsThreadInvariant) {
  const auto& w = world();
  const EpisodeEnv env = w.env();
  const auto a = evaluate_policy(env, w.users, QTable{}, 4, 1);
  const auto b = evaluate_policy(env, w.users, QTable{}, 4, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(step_log_jsonl(a[i]), step_log_jsonl(b[i]));
}
