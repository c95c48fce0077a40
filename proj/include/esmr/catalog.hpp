#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "esmr/rng.hpp"
#include "esmr/types.hpp"

namespace esmr {

struct CatalogConfig {
  int size = 1000;
  double duration_mean = 30.0;
  double duration_sd = 15.0;
  double duration_min = 10.0;
  double duration_max = 90.0;
  // Indexed by VideoEmotion: happy, excited, anxious, stressed, disappointed,
  // angry, sad, calm.
  std::array<double, kVideoEmotionCount> emotion_probs = {0.18, 0.20, 0.16, 0.12,
                                                          0.10, 0.10, 0.08, 0.06};
  std::array<double, kVideoEmotionCount> intensity_mean = {5.0, 7.0, 7.0, 7.0,
                                                           5.0, 7.0, 5.0, 3.0};
  double intensity_sd = 1.5;
  std::array<double, kCategoryCount> category_probs = {0.25, 0.25, 0.25, 0.25};
  std::array<double, kThemeCount> theme_probs = {0.25, 0.25, 0.25, 0.25};
  // Per-category base engagement.
  std::array<double, kCategoryCount> base_engagement = {0.8, 1.2, 1.0, 0.9};
  double short_video_threshold_s = 45.0;
  double short_video_bonus = 0.2;
  double virality_min = 1.0;
  double virality_max = 1.5;
  double viral_probability = 0.05;
  double viral_min = 2.0;
  double viral_max = 4.0;
};

struct VideoItem {
  int id = 0;
  Category category = Category::kEducational;
  Theme theme = Theme::kMentalHealth;
  double duration_s = 30.0;
  VideoEmotion emotion = VideoEmotion::kHappy;
  int intensity = 5;
  double virality = 1.0;
  double engagement_score = 0.0;
};

using Catalog = std::vector<VideoItem>;

double clip_duration(double raw, const CatalogConfig& cfg);
double sample_duration(Rng& rng, const CatalogConfig& cfg);

int round_clip_intensity(double raw);
int sample_intensity(VideoEmotion emotion, Rng& rng, const CatalogConfig& cfg);

double sample_virality(Rng& rng, const CatalogConfig& cfg);

/// base(category) * (0.5 + intensity/10) * (1 + bonus * [duration <= threshold]) * virality
double video_engagement_score(const VideoItem& v, const CatalogConfig& cfg);

/// Generates `n` items. After i.i.d. draws, any (category, emotion) key left
/// empty is filled by moving an item of that emotion out of its emotion's most
/// populated category, which keeps emotion marginals untouched. Throws if n == 0.
Catalog generate_catalog(int n, std::uint64_t seed, const CatalogConfig& cfg = {});

}  // namespace esmr
