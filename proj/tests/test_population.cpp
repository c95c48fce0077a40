#include <gtest/gtest.h>

#include <cmath>

#include "esmr/population.hpp"
#include "testing.hpp"

using namespace esmr;

namespace {

UserProfile plain_profile() {
  UserProfile p;
  p.spike_days = {};
  return p;
}

}  // namespace

TEST(Users, AllTiersPresent) {
  const auto users = generate_users(1000, 1);
  ASSERT_EQ(users.size(), 1000u);
  std::array<int, kTierCount> counts{};
  for (const auto& u : users) ++counts[index_of(u.tier)];
  for (int c : counts) EXPECT_GT(c, 0);
}

TEST(Users, SingleProfile) { EXPECT_EQ(generate_users(1, 3).size(), 1u); }

TEST(Users, EmptyIsAnError) { EXPECT_THROW(generate_users(0, 3), Error); }

TEST(Users, TierProportionsMatchConfig) {
  const PopulationConfig cfg;
  const auto users = generate_users(3000, 8, cfg);
  std::array<double, kTierCount> counts{};
  for (const auto& u : users) counts[index_of(u.tier)] += 1.0;
  for (std::size_t t = 0; t < kTierCount; ++t) {
    EXPECT_NEAR(counts[t] / 3000.0, cfg.tier_probs[t], 0.03);
  }
}

TEST(Users, ProfilesRespectTierRanges) {
  const PopulationConfig cfg;
  for (const auto& u : generate_users(500, 4, cfg)) {
    const TierParams& t = cfg.tiers[index_of(u.tier)];
    EXPECT_GE(u.churn_propensity, t.churn_propensity_min);
    EXPECT_LE(u.churn_propensity, t.churn_propensity_max);
    EXPECT_EQ(u.spike_days.size(), static_cast<std::size_t>(cfg.spike_days_per_user));
    for (int d : u.spike_days) {
      EXPECT_GE(d, 1);
      EXPECT_LE(d, cfg.horizon_days);
    }
  }
}

TEST(Multiplier, CaseTable) {
  const PopulationConfig cfg;
  UserProfile p = plain_profile();
  p.spike_days = {3, 13};  // day 3 is a weekday, day 13 a weekend day
  Rng rng(1);
  EXPECT_NEAR(temporal_multiplier(1, p, rng, cfg), 1.0, 1e-9);
  EXPECT_NEAR(temporal_multiplier(6, p, rng, cfg), 1.2, 1e-9);
  EXPECT_NEAR(temporal_multiplier(7, p, rng, cfg), 1.2, 1e-9);
  for (int i = 0; i < 200; ++i) {
    const double spike = temporal_multiplier(3, p, rng, cfg);
    EXPECT_GE(spike, 1.2);
    EXPECT_LE(spike, 1.8);
    const double weekend_spike = temporal_multiplier(13, p, rng, cfg);
    EXPECT_GE(weekend_spike, 1.2);
    EXPECT_LE(weekend_spike, 1.8);
  }
}

TEST(Multiplier, DayOutsideHorizonIsAnError) {
  UserProfile p = plain_profile();
  Rng rng(1);
  EXPECT_THROW(temporal_multiplier(0, p, rng), Error);
  EXPECT_THROW(temporal_multiplier(31, p, rng), Error);
}

TEST(Session, DegenerateUniformPassesThrough) {
  UserProfile p = plain_profile();
  p.watch_min_s = p.watch_max_s = 200.0;
  Rng rng(2);
  EXPECT_DOUBLE_EQ(sample_session(p, 1.0, rng).watch_s, 200.0);
}

TEST(Session, ScrollMeanMatchesGamma) {
  UserProfile p = plain_profile();
  p.gamma_shape = 3.0;
  p.gamma_scale = 12.0;
  Rng rng(5);
  std::vector<double> s;
  for (int i = 0; i < 10000; ++i) s.push_back(sample_session(p, 1.0, rng).scrolling_s);
  EXPECT_NEAR(oracle::mean(s) / 36.0, 1.0, 0.05);
}

TEST(Session, SpikeRaisesWatchTime) {
  const UserProfile p = plain_profile();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_GT(sample_session(p, 1.5, a).watch_s, sample_session(p, 1.0, b).watch_s);
  }
}

TEST(Skipping, FourHundredFiftySeconds) {
  const std::vector<double> gammas(10, 0.2);
  const SkipResult r = apply_skipping(450.0, gammas);
  EXPECT_EQ(r.encountered, 10);
  EXPECT_EQ(r.skipped, 4);
  EXPECT_EQ(r.watched, 6);
  EXPECT_NEAR(r.adjusted_watch_s, 6 * 45.0 + 4 * 9.0, 1e-9);
  EXPECT_NEAR(r.adjusted_watch_s, 306.0, 1e-9);
}

TEST(Skipping, BelowOneVideo) {
  Rng rng(1);
  const SkipResult r = apply_skipping(30.0, rng);
  EXPECT_EQ(r.encountered, 0);
  EXPECT_DOUBLE_EQ(r.adjusted_watch_s, 0.0);
}

TEST(Skipping, AdjustedNeverExceedsBudget) {
  oracle::Cases gen(17);
  for (int i = 0; i < 500; ++i) {
    Rng rng(gen.seed());
    const double v = gen.real(0.0, 4000.0);
    const SkipResult r = apply_skipping(v, rng);
    EXPECT_EQ(r.watched + r.skipped, r.encountered);
    EXPECT_LE(r.adjusted_watch_s, v + 1e-9);
    for (double g : r.partial_fractions) {
      EXPECT_GE(g, 0.2);
      EXPECT_LE(g, 0.7);
    }
  }
}

TEST(Skipping, NegativeWatchIsAnError) {
  Rng rng(1);
  EXPECT_THROW(apply_skipping(-1.0, rng), Error);
}

TEST(ChurnSignal, Arithmetic) {
  EXPECT_NEAR(update_churn_signal(0.0, 2.0, 1.0), 0.2, 1e-9);
  EXPECT_NEAR(update_churn_signal(1.0, 2.0, 1.0), 1.0, 1e-9);
  EXPECT_NEAR(update_churn_signal(0.5, 0.5, 1.0), 0.8 * 0.5 - 0.2, 1e-9);
  EXPECT_NEAR(update_churn_signal(0.5, 1.0, 1.0), 0.4, 1e-9);
}

TEST(ChurnSignal, StaysInUnitInterval) {
  oracle::Cases gen(23);
  for (int i = 0; i < 200; ++i) {
    double d = gen.real(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      d = update_churn_signal(d, gen.real(0.0, 2.0), 1.0);
      ASSERT_GE(d, -1.0);
      ASSERT_LE(d, 1.0);
    }
  }
}

TEST(Churn, SigmoidAtZero) {
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-9);
  EXPECT_NEAR(churn_probability(0.0, 0.0, 1.5), 0.5, 1e-9);
}

TEST(Churn, ZeroSensitivityIgnoresSignal) {
  oracle::Cases gen(31);
  for (int i = 0; i < 100; ++i) {
    const double p = gen.real(0.0, 1.0);
    EXPECT_DOUBLE_EQ(churn_probability(p, gen.real(-1.0, 1.0), 0.0, -2.0),
                     churn_probability(p, gen.real(-1.0, 1.0), 0.0, -2.0));
  }
}

TEST(Churn, SigmoidIsSymmetricAndStable) {
  oracle::Cases gen(37);
  for (int i = 0; i < 200; ++i) {
    const double x = gen.real(-50.0, 50.0);
    EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-12);
  }
  EXPECT_GE(sigmoid(-800.0), 0.0);
  EXPECT_LE(sigmoid(800.0), 1.0);
}

TEST(Churn, ReengagementRate) {
  ChurnParams params;
  params.reengage_probability = 0.1;
  Rng rng(99);
  int returned = 0;
  for (int i = 0; i < 10000; ++i) {
    if (!churn_step(0.5, 0.0, true, params, rng).churned) ++returned;
  }
  EXPECT_NEAR(returned / 10000.0, 0.1, 0.01);
}

TEST(Preferences, UniformDirichletMean) {
  UserProfile p = plain_profile();
  p.dirichlet_alpha = {1.0, 1.0, 1.0, 1.0};
  Rng rng(7);
  std::array<double, kCategoryCount> sum{};
  for (int i = 0; i < 10000; ++i) {
    const auto c = sample_preferences(p, rng);
    double total = 0.0;
    for (std::size_t k = 0; k < kCategoryCount; ++k) {
      sum[k] += c[k];
      total += c[k];
    }
    ASSERT_NEAR(total, 1.0, 1e-9);
  }
  for (double s : sum) EXPECT_NEAR(s / 10000.0, 0.25, 0.01);
}

TEST(Preferences, EngagedTierConcentrates) {
  const PopulationConfig cfg;
  for (const auto& u : generate_users(200, 12, cfg)) {
    if (u.tier != Tier::kEngaged) continue;
    Rng rng(static_cast<std::uint64_t>(u.id));
    double share = 0.0;
    for (int i = 0; i < 2000; ++i) share += sample_preferences(u, rng)[u.favorite_category];
    EXPECT_GT(share / 2000.0, 0.4);
  }
}

TEST(Preferences, CategoryEngagementSplitsWatchTime) {
  const auto e = category_engagement(100.0, {0.1, 0.2, 0.3, 0.4});
  EXPECT_NEAR(e[0] + e[1] + e[2] + e[3], 100.0, 1e-9);
  EXPECT_NEAR(e[3], 40.0, 1e-9);
}

TEST(Interactions, ZeroRateMeansNoLogins) {
  UserProfile p = plain_profile();
  p.login_rate = 0.0;
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_interactions(p, {}, rng).logins, 0);
}

TEST(Interactions, LoginMeanMatchesRate) {
  UserProfile p = plain_profile();
  p.login_rate = 5.0;
  Rng rng(4);
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(static_cast<double>(sample_interactions(p, {}, rng).logins));
  EXPECT_NEAR(oracle::mean(x) / 5.0, 1.0, 0.03);
}

TEST(Interactions, CommentsAndSharesNeverExceedLikes) {
  const PopulationConfig cfg;
  oracle::Cases gen(41);
  for (const auto& u : generate_users(100, 2, cfg)) {
    Rng rng(gen.seed());
    InteractionContext ctx;
    ctx.activity_scale = gen.real(0.0, 3.0);
    ctx.posted_yesterday = gen.coin();
    for (int i = 0; i < 20; ++i) {
      const Interactions x = sample_interactions(u, ctx, rng, cfg);
      EXPECT_GE(x.likes, 0);
      EXPECT_LE(x.comments, x.likes);
      EXPECT_LE(x.shares, x.likes);
      EXPECT_GE(x.posts, 0);
    }
  }
}

TEST(Affect, StepStaysInBounds) {
  const MoodDynamics cfg;
  oracle::Cases gen(43);
  for (int i = 0; i < 300; ++i) {
    AffectState s{gen.real(-1.0, 1.0), gen.real(0.0, 1.0), gen.real(0.0, 1.0)};
    Rng rng(gen.seed());
    Exposure e;
    for (int v = 0; v < 10; ++v) {
      e.add(kAllVideoEmotions[static_cast<std::size_t>(gen.integer(0, 7))], gen.integer(1, 10), gen.real(0.0, 1.0));
    }
    s = affect_step(s, e, gen.real(-0.3, 0.3), cfg, rng);
    EXPECT_GE(s.valence, -1.0);
    EXPECT_LE(s.valence, 1.0);
    EXPECT_GE(s.arousal, 0.0);
    EXPECT_LE(s.arousal, 1.0);
    EXPECT_GE(s.resilience, 0.0);
    EXPECT_LE(s.resilience, 1.0);
    const auto q = mood_quadrants(s, cfg);
    EXPECT_NEAR(q[0] + q[1] + q[2] + q[3], std::abs(s.valence), 1e-9);
  }
}

TEST(Affect, PositiveContentRaisesValenceOnAverage) {
  const MoodDynamics cfg;
  double up = 0.0, down = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Exposure good, bad;
    for (int v = 0; v < 8; ++v) {
      good.add(VideoEmotion::kHappy, 7, 1.0);
      bad.add(VideoEmotion::kStressed, 7, 1.0);
    }
    Rng a(seed), b(seed);
    up += affect_step({}, good, 0.0, cfg, a).valence;
    down += affect_step({}, bad, 0.0, cfg, b).valence;
  }
  EXPECT_GT(up, down);
}
