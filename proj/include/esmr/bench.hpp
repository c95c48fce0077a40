#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "esmr/policy.hpp"

namespace esmr {

struct RunMetrics {
  double recovery_time_days = 0.0;
  double mean_valence = 0.0;
  double negative_emotion_days = 0.0;
  double volatility = 0.0;
  double bounce_rate = 0.0;
  double mean_engagement_reward = 0.0;
  double cumulative_causal_bonus = 0.0;
  std::size_t users = 0;
};

/// Per-user view of an evaluation log.
struct UserTrajectory {
  int user = 0;
  std::vector<UserEmotion> labels;  // day 1..horizon
  std::vector<double> r_eng;        // 0 on churned days
  std::vector<double> r_cause;
};

struct UserMetrics {
  int user = 0;
  int recovery_time = 0;
  int negative_days = 0;
  double volatility = 0.0;
  int bounce_events = 0;
  double mean_valence = 0.0;  // over active days, 0 if none
  int active_days = 0;
  double engagement_reward = 0.0;  // mean over all days
  double causal_bonus = 0.0;       // sum over all days
};

/// Groups logs by user (ascending id). Throws unless every user has exactly
/// days 1..horizon.
std::vector<UserTrajectory> trajectories_from_logs(std::span<const StepLog> logs, int horizon);

/// Days before the first run of >= hold happy/excited days; the horizon if
/// there is none.
int recovery_time(std::span<const UserEmotion> labels, int hold = 3);
/// Population std of the +1/-1 valence code over active days.
double emotion_volatility(std::span<const UserEmotion> labels);
/// Adjacent-day swings between {happy, excited} and {stressed, frustrated}.
int bounce_events(std::span<const UserEmotion> labels);

UserMetrics user_metrics(const UserTrajectory& t);
/// Means over users; valence is pooled over active user-days.
RunMetrics aggregate_metrics(std::span<const UserMetrics> users);
RunMetrics compute_metrics(std::span<const StepLog> logs, int horizon);

struct AblationVariant {
  std::string name;
  RewardWeights weights;
  bool agent_enabled = true;
};

/// full, emotion_off (alpha_emo = 0), engagement_off (r_eng weight 0), scorer_only.
std::vector<AblationVariant> default_variants(const RewardWeights& base);

struct VariantResult {
  AblationVariant variant;
  RunMetrics metrics;
  std::vector<UserMetrics> users;
  std::vector<EpochSummary> training;
  std::vector<StepLog> logs;  // evaluation
};

/// Trains one agent per learning variant and evaluates every variant on the
/// same users with the same simulation seed. `env.config.reward` and
/// `env.agent_enabled` are replaced per variant.
VariantResult run_variant(const EpisodeEnv& env, const AblationVariant& variant,
                          const std::vector<UserProfile>& users, std::uint64_t seed, int threads,
                          const QTable* trained = nullptr);
std::vector<VariantResult> run_ablation(const EpisodeEnv& env, const std::vector<AblationVariant>& variants,
                                        const std::vector<UserProfile>& users, std::uint64_t seed,
                                        int threads);

std::string metrics_csv(std::span<const VariantResult> results);
std::string ablation_csv(std::span<const VariantResult> results);
std::string trajectories_jsonl(std::span<const StepLog> logs);
std::string report_markdown(std::span<const VariantResult> results, const std::string& run_id);

}  // namespace esmr
