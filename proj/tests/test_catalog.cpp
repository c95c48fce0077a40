#include <gtest/gtest.h>

#include <map>

#include "esmr/catalog.hpp"
#include "esmr/io.hpp"
#include "testing.hpp"

using namespace esmr;

namespace {

std::vector<double> scores_of(const Catalog& c, VideoEmotion e) {
  std::vector<double> out;
  for (const auto& v : c) {
    if (v.emotion == e) out.push_back(v.engagement_score);
  }
  return out;
}

void expect_item_invariants(const VideoItem& v) {
  EXPECT_GE(v.duration_s, 10.0);
  EXPECT_LE(v.duration_s, 90.0);
  EXPECT_GE(v.intensity, 1);
  EXPECT_LE(v.intensity, 10);
  EXPECT_GE(v.virality, 1.0);
  EXPECT_GT(v.engagement_score, 0.0);
}

}  // namespace

TEST(Catalog, DefaultSizeRespectsBounds) {
  const Catalog c = generate_catalog(1000, 42);
  ASSERT_EQ(c.size(), 1000u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].id, static_cast<int>(i));
    expect_item_invariants(c[i]);
  }
}

TEST(Catalog, SingletonHoldsInvariants) {
  const Catalog c = generate_catalog(1, 5);
  ASSERT_EQ(c.size(), 1u);
  expect_item_invariants(c[0]);
}

TEST(Catalog, EmptyIsAnError) { EXPECT_THROW(generate_catalog(0, 1), Error); }

TEST(Catalog, SameSeedSameBytes) {
  EXPECT_EQ(catalog_csv(generate_catalog(500, 9)), catalog_csv(generate_catalog(500, 9)));
  EXPECT_NE(catalog_csv(generate_catalog(500, 9)), catalog_csv(generate_catalog(500, 10)));
}

TEST(Catalog, EmotionMarginalsMatchConfig) {
  const CatalogConfig cfg;
  const Catalog c = generate_catalog(10000, 7, cfg);
  std::vector<double> observed(kVideoEmotionCount, 0.0), expected(kVideoEmotionCount, 0.0);
  for (const auto& v : c) observed[index_of(v.emotion)] += 1.0;
  for (std::size_t e = 0; e < kVideoEmotionCount; ++e) {
    expected[e] = cfg.emotion_probs[e] * 10000.0;
    EXPECT_NEAR(observed[e] / 10000.0, cfg.emotion_probs[e], 0.02) << to_string(kAllVideoEmotions[e]);
  }
  EXPECT_GT(oracle::chi_square_p(observed, expected), 0.001);
}

TEST(Catalog, EveryActionKeyIsCovered) {
  const Catalog c = generate_catalog(1000, 42);
  std::map<std::pair<std::size_t, std::size_t>, int> keys;
  for (const auto& v : c) ++keys[{index_of(v.category), index_of(v.emotion)}];
  EXPECT_EQ(keys.size(), kCategoryCount * kVideoEmotionCount);
}

TEST(Duration, ClipsToRange) {
  const CatalogConfig cfg;
  EXPECT_DOUBLE_EQ(clip_duration(30.0, cfg), 30.0);
  EXPECT_DOUBLE_EQ(clip_duration(-5.0, cfg), 10.0);
  EXPECT_DOUBLE_EQ(clip_duration(200.0, cfg), 90.0);
}

TEST(Duration, DrawsStayInRange) {
  Rng rng(3);
  const CatalogConfig cfg;
  for (int i = 0; i < 5000; ++i) {
    const double d = sample_duration(rng, cfg);
    ASSERT_GE(d, 10.0);
    ASSERT_LE(d, 90.0);
  }
}

TEST(Intensity, RoundsAndClips) {
  EXPECT_EQ(round_clip_intensity(4.4), 4);
  EXPECT_EQ(round_clip_intensity(12.3), 10);
  EXPECT_EQ(round_clip_intensity(-3.0), 1);
}

TEST(Intensity, HighArousalMeanMatchesConfig) {
  const CatalogConfig cfg;
  Rng rng(11);
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(sample_intensity(VideoEmotion::kExcited, rng, cfg));
  EXPECT_NEAR(oracle::mean(x), cfg.intensity_mean[index_of(VideoEmotion::kExcited)], 0.3);
}

TEST(EngagementScore, IdentityFactorsGiveBase) {
  const CatalogConfig cfg;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    VideoItem v;
    v.category = static_cast<Category>(c);
    v.intensity = 5;       // 0.5 + 5/10 = 1
    v.duration_s = 60.0;   // above the short-video threshold
    v.virality = 1.0;
    EXPECT_DOUBLE_EQ(video_engagement_score(v, cfg), cfg.base_engagement[c]);
  }
}

TEST(EngagementScore, MatchesIndependentFormula) {
  const CatalogConfig cfg;
  oracle::Cases gen(101);
  for (int i = 0; i < 500; ++i) {
    VideoItem v;
    v.category = static_cast<Category>(gen.integer(0, 3));
    v.intensity = gen.integer(1, 10);
    v.duration_s = gen.real(10.0, 90.0);
    v.virality = gen.real(1.0, 4.0);
    const double base = cfg.base_engagement[index_of(v.category)];
    const double oracle = base * (0.5 + 0.1 * v.intensity) * (v.duration_s <= 45.0 ? 1.2 : 1.0) * v.virality;
    EXPECT_NEAR(video_engagement_score(v, cfg), oracle, 1e-12);
  }
}

TEST(EngagementScore, LinearInViralityMonotoneInIntensity) {
  const CatalogConfig cfg;
  oracle::Cases gen(202);
  for (int i = 0; i < 300; ++i) {
    VideoItem v;
    v.category = static_cast<Category>(gen.integer(0, 3));
    v.intensity = gen.integer(1, 9);
    v.duration_s = gen.real(10.0, 90.0);
    v.virality = gen.real(1.0, 2.0);
    VideoItem twice = v;
    twice.virality *= 2.0;
    EXPECT_NEAR(video_engagement_score(twice, cfg), 2.0 * video_engagement_score(v, cfg), 1e-12);
    VideoItem louder = v;
    louder.intensity += 1;
    EXPECT_GE(video_engagement_score(louder, cfg), video_engagement_score(v, cfg));
  }
}

TEST(EngagementScore, ExcitedOutscoresDisappointed) {
  for (std::uint64_t seed : {42u, 1u, 2u, 3u, 4u}) {
    const Catalog c = generate_catalog(1000, seed);
    const auto ex = scores_of(c, VideoEmotion::kExcited);
    const auto dis = scores_of(c, VideoEmotion::kDisappointed);
    EXPECT_GT(oracle::mean(ex), oracle::mean(dis)) << "seed " << seed;
    EXPECT_GT(oracle::variance(ex), oracle::variance(dis)) << "seed " << seed;
  }
}
