#include "esmr/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace esmr {

double clip_duration(double raw, const CatalogConfig& cfg) {
  return std::clamp(raw, cfg.duration_min, cfg.duration_max);
}

double sample_duration(Rng& rng, const CatalogConfig& cfg) {
  return clip_duration(rng.normal(cfg.duration_mean, cfg.duration_sd), cfg);
}

int round_clip_intensity(double raw) {
  return static_cast<int>(std::clamp(std::lround(raw), 1L, 10L));
}

int sample_intensity(VideoEmotion emotion, Rng& rng, const CatalogConfig& cfg) {
  return round_clip_intensity(rng.normal(cfg.intensity_mean[index_of(emotion)], cfg.intensity_sd));
}

double sample_virality(Rng& rng, const CatalogConfig& cfg) {
  if (rng.bernoulli(cfg.viral_probability)) return rng.uniform(cfg.viral_min, cfg.viral_max);
  return rng.uniform(cfg.virality_min, cfg.virality_max);
}

double video_engagement_score(const VideoItem& v, const CatalogConfig& cfg) {
  const double base = cfg.base_engagement[index_of(v.category)];
  const double intensity_factor = 0.5 + v.intensity / 10.0;
  const double duration_factor =
      1.0 + (v.duration_s <= cfg.short_video_threshold_s ? cfg.short_video_bonus : 0.0);
  return base * intensity_factor * duration_factor * v.virality;
}

Catalog generate_catalog(int n, std::uint64_t seed, const CatalogConfig& cfg) {
  if (n <= 0) throw Error("catalog size must be >= 1 (empty catalog)");
  Rng rng = Rng::stream(seed, "catalog");
  Catalog items;
  items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    VideoItem v;
    v.id = i;
    v.category = static_cast<Category>(rng.categorical(cfg.category_probs));
    v.theme = static_cast<Theme>(rng.categorical(cfg.theme_probs));
    v.duration_s = sample_duration(rng, cfg);
    v.emotion = static_cast<VideoEmotion>(rng.categorical(cfg.emotion_probs));
    v.intensity = sample_intensity(v.emotion, rng, cfg);
    v.virality = sample_virality(rng, cfg);
    v.engagement_score = video_engagement_score(v, cfg);
    items.push_back(v);
  }

  // Coverage repair: every (category, emotion) key should own at least one item.
  for (std::size_t e = 0; e < kVideoEmotionCount; ++e) {
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      auto key_count = [&](std::size_t cat) {
        return std::count_if(items.begin(), items.end(), [&](const VideoItem& v) {
          return index_of(v.emotion) == e && index_of(v.category) == cat;
        });
      };
      if (key_count(c) > 0) continue;
      std::size_t donor = 0;
      long best = 0;
      for (std::size_t d = 0; d < kCategoryCount; ++d) {
        const long k = key_count(d);
        if (k > best) {
          best = k;
          donor = d;
        }
      }
      if (best < 2) continue;  // nothing to spare
      for (auto& v : items) {
        if (index_of(v.emotion) == e && index_of(v.category) == donor) {
          v.category = static_cast<Category>(c);
          v.engagement_score = video_engagement_score(v, cfg);
          break;
        }
      }
    }
  }
  return items;
}

}  // namespace esmr
