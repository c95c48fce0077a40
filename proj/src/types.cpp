#include "esmr/types.hpp"

#include <algorithm>

namespace esmr {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "educational", "entertainment", "news", "inspirational"};
constexpr std::array<std::string_view, kThemeCount> kThemeNames = {
    "mental_health", "politics", "motivation", "relationships"};
constexpr std::array<std::string_view, kVideoEmotionCount> kVideoEmotionNames = {
    "happy", "excited", "anxious", "stressed", "disappointed", "angry", "sad", "calm"};
constexpr std::array<std::string_view, kUserEmotionCount> kUserEmotionNames = {
    "happy", "excited", "frustrated", "disappointed", "stressed", "churned"};
constexpr std::array<std::string_view, kTierCount> kTierNames = {"casual", "engaged",
                                                                 "highly_active"};

template <typename Enum, std::size_t N>
Enum parse(std::string_view s, const std::array<std::string_view, N>& names,
           const char* what) {
  auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) {
    throw Error(std::string("unknown ") + what + " '" + std::string(s) + "'");
  }
  return static_cast<Enum>(it - names.begin());
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames.at(index_of(c)); }
std::string_view to_string(Theme t) { return kThemeNames.at(index_of(t)); }
std::string_view to_string(VideoEmotion e) { return kVideoEmotionNames.at(index_of(e)); }
std::string_view to_string(UserEmotion e) { return kUserEmotionNames.at(index_of(e)); }
std::string_view to_string(Tier t) { return kTierNames.at(index_of(t)); }

Category parse_category(std::string_view s) {
  return parse<Category>(s, kCategoryNames, "category");
}
Theme parse_theme(std::string_view s) { return parse<Theme>(s, kThemeNames, "theme"); }
VideoEmotion parse_video_emotion(std::string_view s) {
  return parse<VideoEmotion>(s, kVideoEmotionNames, "video emotion");
}
UserEmotion parse_user_emotion(std::string_view s) {
  return parse<UserEmotion>(s, kUserEmotionNames, "user emotion");
}
Tier parse_tier(std::string_view s) { return parse<Tier>(s, kTierNames, "tier"); }

int valence_sign(VideoEmotion e) {
  switch (e) {
    case VideoEmotion::kHappy:
    case VideoEmotion::kExcited:
    case VideoEmotion::kCalm:
      return 1;
    default:
      return -1;
  }
}

bool is_high_arousal(VideoEmotion e) {
  return e == VideoEmotion::kExcited || e == VideoEmotion::kAngry ||
         e == VideoEmotion::kAnxious || e == VideoEmotion::kStressed;
}

double valence(UserEmotion e) {
  switch (e) {
    case UserEmotion::kHappy:
    case UserEmotion::kExcited:
      return 1.0;
    case UserEmotion::kChurned:
      return 0.0;
    default:
      return -1.0;
  }
}

bool is_negative(UserEmotion e) {
  return e == UserEmotion::kStressed || e == UserEmotion::kDisappointed ||
         e == UserEmotion::kFrustrated;
}

bool is_positive(UserEmotion e) {
  return e == UserEmotion::kHappy || e == UserEmotion::kExcited;
}

}  // namespace esmr
