#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esmr {

/// Base class for every error raised by the library. `code()` maps onto the
/// CLI exit status.
class Error : public std::runtime_error {
 public:
  enum class Kind { kConfig = 2, kMissingDependency = 3, kRuntime = 4 };

  explicit Error(const std::string& what, Kind kind = Kind::kRuntime)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }
  int code() const noexcept { return static_cast<int>(kind_); }

 private:
  Kind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, Kind::kConfig) {}
};

class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& what)
      : Error(what, Kind::kMissingDependency) {}
};

inline constexpr std::size_t kCategoryCount = 4;
inline constexpr std::size_t kThemeCount = 4;
inline constexpr std::size_t kVideoEmotionCount = 8;
inline constexpr std::size_t kUserEmotionCount = 6;
inline constexpr std::size_t kTierCount = 3;
inline constexpr std::size_t kActionCount = kCategoryCount * kVideoEmotionCount;

enum class Category { kEducational, kEntertainment, kNews, kInspirational };
enum class Theme { kMentalHealth, kPolitics, kMotivation, kRelationships };

enum class VideoEmotion {
  kHappy,
  kExcited,
  kAnxious,
  kStressed,
  kDisappointed,
  kAngry,
  kSad,
  kCalm,
};

enum class UserEmotion {
  kHappy,
  kExcited,
  kFrustrated,
  kDisappointed,
  kStressed,
  kChurned,
};

enum class Tier { kCasual, kEngaged, kHighlyActive };

std::string_view to_string(Category c);
std::string_view to_string(Theme t);
std::string_view to_string(VideoEmotion e);
std::string_view to_string(UserEmotion e);
std::string_view to_string(Tier t);

Category parse_category(std::string_view s);
Theme parse_theme(std::string_view s);
VideoEmotion parse_video_emotion(std::string_view s);
UserEmotion parse_user_emotion(std::string_view s);
Tier parse_tier(std::string_view s);

template <typename Enum>
constexpr std::size_t index_of(Enum e) {
  return static_cast<std::size_t>(e);
}

/// Valence sign of a content emotion: +1 for happy/excited/calm, -1 otherwise.
int valence_sign(VideoEmotion e);
/// True for excited, angry, anxious and stressed.
bool is_high_arousal(VideoEmotion e);

/// Fixed numeric valence of a user emotion (+1 / -1, churned 0).
double valence(UserEmotion e);
bool is_negative(UserEmotion e);
bool is_positive(UserEmotion e);

inline constexpr std::array<UserEmotion, kUserEmotionCount> kAllUserEmotions = {
    UserEmotion::kHappy,        UserEmotion::kExcited,  UserEmotion::kFrustrated,
    UserEmotion::kDisappointed, UserEmotion::kStressed, UserEmotion::kChurned};

inline constexpr std::array<VideoEmotion, kVideoEmotionCount> kAllVideoEmotions = {
    VideoEmotion::kHappy,        VideoEmotion::kExcited, VideoEmotion::kAnxious,
    VideoEmotion::kStressed,     VideoEmotion::kDisappointed, VideoEmotion::kAngry,
    VideoEmotion::kSad,          VideoEmotion::kCalm};

}  // namespace esmr
