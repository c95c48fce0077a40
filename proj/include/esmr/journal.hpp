#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "esmr/catalog.hpp"
#include "esmr/population.hpp"

namespace esmr {

struct EngagementWeights {
  double watch = 1.0;
  double scroll = 0.1;
  double logins = 0.02;
  double posts = 0.05;
  double likes = 0.03;
  double comments = 0.05;
  double shares = 0.05;
  double watch_norm_s = 600.0;
  double scroll_norm_s = 60.0;
};

struct JournalConfig {
  double top_fraction = 0.7;
  int recency_days = 5;
  double skip_min = 0.05;
  double skip_max = 0.95;
  double mean_video_s = 45.0;
  double partial_min = 0.2;
  double partial_max = 0.7;
  int warmup_days = 7;
  // Churn threshold; a negative value means "median E of the warm-up pass".
  double tau = -1.0;
  EngagementWeights weights;
};

struct Assignment {
  int video_id = 0;
  int minute = 0;  // minutes since midnight
};

struct DailyRecord {
  int user_id = 0;
  int day = 1;
  std::vector<Assignment> assigned;
  std::vector<int> skipped;
  double scroll_s = 0.0;
  double watch_budget_s = 0.0;
  double watch_s = 0.0;  // adjusted watch time actually spent
  double multiplier = 0.0;
  double engagement = 0.0;
  double delta_e = 0.0;
  double scroll_watch_ratio = 0.0;
  std::array<double, kCategoryCount> category_time = {0.0, 0.0, 0.0, 0.0};
  Interactions interactions;
  bool churned = false;
  std::optional<UserEmotion> dominant_emotion;
  // Content summary of the day.
  double mean_intensity = 0.0;
  double mean_video_valence = 0.0;
  double mean_video_score = 0.0;
  double high_arousal_share = 0.0;
  // Simulator ground truth, kept for diagnostics only; never a model input.
  AffectState latent;

  bool active() const { return !churned; }
};

inline constexpr std::size_t kContinuousFeatureCount = 32;
inline constexpr std::size_t kCategoricalFeatureCount = 4;
/// Columns 30 and 31 are derived from emotion labels of earlier days.
inline constexpr std::size_t kLabelDerivedBegin = 30;

extern const std::array<std::string_view, kContinuousFeatureCount> kContinuousFeatureNames;
extern const std::array<std::string_view, kCategoricalFeatureCount> kCategoricalFeatureNames;
/// tier, dominant category (+none), prior-day emotion (+none), day of week.
inline constexpr std::array<int, kCategoricalFeatureCount> kCategoricalCardinality = {3, 5, 7, 7};

std::size_t continuous_index(std::string_view name);

struct FeatureRow {
  int user_id = 0;
  int day = 1;
  std::array<double, kContinuousFeatureCount> continuous{};
  std::array<int, kCategoricalFeatureCount> categorical{};
};

/// Ordered list of candidates; skip probabilities are normalized by the best
/// engagement score inside each group.
struct Feed {
  std::vector<std::vector<int>> groups;  // video ids
};

/// Per-user simulation state carried across days.
struct UserSimState {
  const UserProfile* profile = nullptr;
  AffectState affect;
  Exposure pending;  // content of the last active day, felt at the start of the next
  double delta_e = 0.0;
  bool churned = false;
  bool posted_yesterday = false;
  std::vector<int> last_seen_day;  // per video id, 0 = never
  Rng rng;

  UserSimState(const UserProfile& p, std::size_t catalog_size, Rng stream);
  bool seen_recently(int video_id, int day, int window) const;
};

struct FeedRequest {
  const UserSimState& state;
  int day;
  double budget_s;
  std::array<double, kCategoryCount> preferences;
  Rng& rng;
};

using FeedProvider = std::function<Feed(const FeedRequest&)>;

/// ceil(top_fraction * m) best-scoring items followed by the rest drawn
/// uniformly from the remainder. Throws if m > pool size.
std::vector<int> select_candidates_70_30(const std::vector<const VideoItem*>& pool, std::size_t m,
                                         Rng& rng, double top_fraction = 0.7);

struct EngagementInputs {
  double watch_s = 0.0;
  double scroll_s = 0.0;
  Interactions interactions;
};

/// Linear composite of normalized watch time, scrolling time and interaction counts.
double composite_engagement(const EngagementInputs& in, const EngagementWeights& w);
double composite_engagement(const DailyRecord& r, const EngagementWeights& w);

/// P_skip(v) = clamp(1 - score / max_score, skip_min, skip_max)
double skip_probability(double score, double max_score, const JournalConfig& cfg);

/// Runs Algorithm-1 style days for one user against any feed source.
class DaySimulator {
 public:
  DaySimulator(const Catalog& catalog, const PopulationConfig& population,
               const JournalConfig& journal, double tau);

  /// The organic feed: per category, round(c_k * V / v_bar) candidates from
  /// videos not seen in the recency window, chosen by the 70/30 rule.
  Feed organic_feed(const FeedRequest& req) const;

  DailyRecord step(UserSimState& state, int day, const FeedProvider& feed,
                   bool allow_churn = true) const;
  DailyRecord step_organic(UserSimState& state, int day, bool allow_churn = true) const;

  const Catalog& catalog() const { return catalog_; }
  double tau() const { return tau_; }
  const JournalConfig& journal_config() const { return journal_; }
  const PopulationConfig& population_config() const { return population_; }

 private:
  const Catalog& catalog_;
  const PopulationConfig& population_;
  const JournalConfig& journal_;
  double tau_;
  // Catalog ids per category, ordered by descending score (ties by id).
  std::array<std::vector<int>, kCategoryCount> by_category_;
};

/// Feature row for day t given the previous day's record of the same user
/// (nullptr on day 1). Label-derived columns are left at zero and prior
/// emotion at "none".
FeatureRow make_feature_row(const DailyRecord& record, const DailyRecord* previous,
                            const UserProfile& profile);

/// Sets prior-day emotion and the trailing stressed/negative counts from
/// labels of the same user's earlier days (`history` ordered by day, ending at t-1).
void fill_label_features(FeatureRow& row, std::span<const UserEmotion> history);

struct Dataset {
  std::vector<DailyRecord> records;  // ordered by (user_id, day)
  std::vector<FeatureRow> features;  // aligned with records
  double tau = 0.0;
  int days = 0;
};

/// Median composite engagement over a churn-free warm-up pass.
double estimate_tau(const std::vector<UserProfile>& users, const Catalog& catalog,
                    const PopulationConfig& population, const JournalConfig& journal,
                    std::uint64_t seed, int threads = 1);

Dataset build_dataset(const std::vector<UserProfile>& users, const Catalog& catalog, int days,
                      std::uint64_t seed, const PopulationConfig& population,
                      const JournalConfig& journal, int threads = 1);

}  // namespace esmr
