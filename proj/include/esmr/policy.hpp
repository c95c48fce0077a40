#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esmr/affect.hpp"
#include "esmr/causal.hpp"
#include "esmr/gbdt.hpp"
#include "esmr/journal.hpp"

namespace esmr {

// ---- engagement scorer ----

inline constexpr std::size_t kScorerFeatureCount = 11;
extern const std::array<std::string_view, kScorerFeatureCount> kScorerFeatureNames;

/// What the scorer knows about the user on a given day.
struct ScorerContext {
  Tier tier = Tier::kCasual;
  int prior_emotion = 6;  // UserEmotion index, 6 = none
  int favorite_category = 0;

  int key() const;  // dense index over all contexts
  static constexpr int kCount = 3 * 7 * 4;
};

std::array<double, kScorerFeatureCount> scorer_features(const VideoItem& v, const ScorerContext& ctx);

struct ScorerConfig {
  GbdtConfig gbdt;
  double validation_fraction = 0.2;
  std::size_t max_rows = 200000;  // uniform subsample above this
};

struct EngagementScorer {
  Gbdt model;
  double validation_auc = 0.0;
  int rounds = 0;
  std::size_t train_rows = 0;
  std::size_t valid_rows = 0;

  double predict(const VideoItem& v, const ScorerContext& ctx) const;

  std::string to_json() const;
  static EngagementScorer from_json(const std::string& text);
};

/// One row per video a user encountered: 1 if watched, 0 if skipped.
struct ScorerDataset {
  Matrix X;
  std::vector<int> y;
  std::vector<int> user_ids;
};

/// `labels` aligned with ds.records; they supply the prior-day emotion.
ScorerDataset build_scorer_dataset(const Dataset& ds, std::span<const UserEmotion> labels,
                                   const std::vector<UserProfile>& users, const Catalog& catalog);

/// Users are split into train and validation sets; rows are subsampled to
/// `max_rows` first. Throws if either class is missing from training.
EngagementScorer train_scorer(const ScorerDataset& data, const ScorerConfig& cfg, std::uint64_t seed);

/// Descending predicted watch probability, ties by smaller video id.
std::vector<int> rank_candidates(const EngagementScorer& scorer, const ScorerContext& ctx,
                                 std::span<const VideoItem> candidates);

/// Whole-catalog ranking for every context, computed once.
class RankingCache {
 public:
  RankingCache(const EngagementScorer& scorer, const Catalog& catalog, int threads = 1);
  const std::vector<int>& ranking(const ScorerContext& ctx) const;

 private:
  std::vector<std::vector<int>> rankings_;
};

// ---- state, actions ----

inline constexpr int kStreakBuckets = 3;
inline constexpr int kTertiles = 3;
inline constexpr int kLastCategories = static_cast<int>(kCategoryCount) + 1;
inline constexpr int kStateCount =
    static_cast<int>(kUserEmotionCount) * kStreakBuckets * kTertiles * kLastCategories;
inline constexpr int kActions = static_cast<int>(kActionCount);

/// What the policy remembers of one finished day.
struct DayOutcome {
  int day = 1;
  bool churned = true;
  UserEmotion label = UserEmotion::kChurned;
  double engagement = 0.0;
  int dominant_category = static_cast<int>(kCategoryCount);  // 4 = none
  std::array<double, kCausalFeatureCount> features{};
};

struct EngagementTertiles {
  double low = 0.0;   // E <= low is the bottom tertile
  double high = 0.0;  // E > high is the top tertile
};

/// Cut points from the active days of a dataset.
EngagementTertiles engagement_tertiles(const Dataset& ds);

struct PolicyState {
  // Emotion of the last observed day; churned also stands for "no day yet".
  UserEmotion emotion = UserEmotion::kChurned;
  int streak_bucket = 0;  // trailing negative days: 0, 1-2, >=3
  int engagement_tertile = 0;
  int last_category = static_cast<int>(kCategoryCount);

  int index() const;
  static PolicyState from_index(int index);
};

int trailing_negative_days(std::span<const UserEmotion> labels);
PolicyState encode_state(std::span<const DayOutcome> history, const EngagementTertiles& tertiles);

struct ActionKey {
  Category category = Category::kEducational;
  VideoEmotion emotion = VideoEmotion::kHappy;

  int index() const { return static_cast<int>(index_of(category) * kVideoEmotionCount + index_of(emotion)); }
  static ActionKey from_index(int index);
};

/// Up to m videos for an action key, taken in scorer order from the key's
/// pool, then the same emotion in other categories, then emotions with the
/// same valence and arousal class, then anything. Recent repeats are skipped.
std::vector<int> resolve_action(ActionKey key, const std::vector<int>& ranking, const Catalog& catalog,
                                const UserSimState& state, int day, std::size_t m, int recency_days);

/// Top m of the ranking, skipping recent repeats.
std::vector<int> scorer_slate(const std::vector<int>& ranking, const UserSimState& state, int day,
                              std::size_t m, int recency_days);

// ---- switching ----

enum class PolicyKind { kScorer, kAgent };
std::string_view to_string(PolicyKind p);

/// True iff the last `min_streak` or more labels are all stressed,
/// disappointed or frustrated. Churned days break the streak.
bool is_vulnerable(std::span<const UserEmotion> trajectory, int min_streak = 3);
PolicyKind select_policy(std::span<const UserEmotion> trajectory, int min_streak = 3);

// ---- Q-learning ----

class QTable {
 public:
  QTable(int states = kStateCount, int actions = kActions);

  int states() const { return states_; }
  int actions() const { return actions_; }
  double q(int s, int a) const { return q_[idx(s, a)]; }
  double& q(int s, int a) { return q_[idx(s, a)]; }
  std::int64_t visits(int s, int a) const { return visits_[idx(s, a)]; }
  void visit(int s, int a) { ++visits_[idx(s, a)]; }
  double max_q(int s) const;
  /// Lowest action index among the maxima.
  int argmax(int s) const;
  double max_abs() const;

  std::string to_csv() const;
  static QTable from_csv(const std::string& text);

 private:
  std::size_t idx(int s, int a) const;
  int states_;
  int actions_;
  std::vector<double> q_;
  std::vector<std::int64_t> visits_;
};

/// Q(s,a) += lr * (r + gamma * max Q(s') - Q(s,a)); s_next < 0 is terminal.
void q_update(QTable& table, int s, int a, double r, int s_next, double lr, double gamma);

/// P(a) proportional to exp(Q(s,a)/T), evaluated with the row max subtracted.
int boltzmann_select(const QTable& table, int s, double temperature, Rng& rng);
std::vector<double> boltzmann_probabilities(const QTable& table, int s, double temperature);

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = -1;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);
  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest first.
  std::vector<Transition> contents() const;
  /// min(batch, size) distinct transitions, uniformly.
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

// ---- reward ----

struct RewardWeights {
  double engagement = 1.0;  // 0 drops r_eng from the total
  double alpha_emo = 1.0;
  double eta = 1.0;
  double beta = 0.5;
  double amplification = 2.0;
};

struct RewardBreakdown {
  double r_eng = 0.0;
  double r_emo = 0.0;
  double r_cause = 0.0;
  double engagement_weight = 1.0;
  double alpha_emo = 1.0;
  double beta = 0.5;
  double amplification = 2.0;
  bool vulnerable = false;
  double total = 0.0;

  double beta_effective() const { return vulnerable ? beta * amplification : beta; }
  /// The weighted sum, recomputed from the fields.
  double recompute() const;
};

/// Observable result of one recommendation day.
struct RewardOutcome {
  double engagement = 0.0;  // composite E
  double tau = 1.0;
  std::optional<UserEmotion> previous;
  UserEmotion current = UserEmotion::kChurned;
  std::array<double, kCausalFeatureCount> features{};
  std::optional<std::array<double, kCausalFeatureCount>> previous_features;
};

/// A parent set and the direction that counts as improvement (+1 for
/// outcomes to raise, -1 for outcomes to lower).
struct RewardTarget {
  ParentSet parents;
  double sign = 1.0;
};

/// sum over parents of lambda_f * (x_f - x_prev_f) / scale_f, averaged over
/// targets with their signs; zero without a previous day. Throws if a parent
/// names a feature the outcome does not carry.
double causal_bonus(const RewardOutcome& outcome, std::span<const RewardTarget> targets);

RewardBreakdown compute_reward(const RewardOutcome& outcome, std::span<const RewardTarget> targets,
                               bool vulnerable, const RewardWeights& weights);
/// Assembles the total from already computed components.
RewardBreakdown combine_reward(double r_eng, double r_emo, double r_cause, bool vulnerable,
                               const RewardWeights& weights);

/// tanh(E / tau), inside (-1, 1).
double engagement_reward(double engagement, double tau);

// ---- episodes ----

struct AgentConfig {
  double learning_rate = 0.1;
  double discount = 0.95;
  int epochs = 10;
  std::size_t replay_capacity = 10000;
  std::size_t replay_batch = 64;
  double temperature = 1.0;
  double temperature_decay = 0.7;
  int vulnerable_streak = 3;
  RewardWeights reward;
  // Outcomes whose parent sets shape the reward; names ending in
  // "stressed" count as outcomes to lower.
  std::vector<std::string> reward_targets = {"next_day_happy", "next_day_stressed"};
};

std::vector<RewardTarget> reward_targets(const std::vector<ParentSet>& parents,
                                         const std::vector<std::string>& names);

/// Everything an episode reads; nothing in here is mutated.
struct EpisodeEnv {
  const Catalog& catalog;
  const DaySimulator& simulator;
  const EmotionClassifier& classifier;
  const RankingCache& rankings;
  std::vector<RewardTarget> targets;
  EngagementTertiles tertiles;
  AgentConfig config;
  int days = 30;
  bool agent_enabled = true;
};

struct StepLog {
  int epoch = -1;  // -1 for evaluation
  int user = 0;
  int day = 1;
  int state = -1;   // -1 on churned days
  int action = -1;  // ActionKey index; for scorer days, the key of the top video
  std::optional<PolicyKind> policy;  // empty on churned days
  RewardBreakdown reward;
  UserEmotion emotion = UserEmotion::kChurned;
  double engagement = 0.0;
  AffectState latent;  // simulator ground truth for diagnostics; never read by the policy
};

/// How actions are chosen on agent days.
struct ActionMode {
  bool greedy = true;
  double temperature = 1.0;
};

/// Simulates one user for `env.days` days under the hybrid policy. With a
/// `learner` every active day is a Q-learning step (scorer days update
/// off-policy with the key of the top video); `learner` may alias `table`.
/// Day randomness comes from (seed, sim_tag, user, day) so paired runs share it.
std::vector<StepLog> run_episode(const EpisodeEnv& env, const UserProfile& user, const QTable& table,
                                 const ActionMode& mode, Rng& action_rng, std::uint64_t seed,
                                 std::string_view sim_tag, QTable* learner, ReplayBuffer* replay,
                                 int epoch);

struct EpochSummary {
  int epoch = 0;
  double temperature = 0.0;
  double mean_episode_reward = 0.0;
  double action_entropy = 0.0;  // of agent-chosen actions, nats
  std::size_t agent_steps = 0;
};

struct AgentTraining {
  QTable table;
  std::vector<EpochSummary> epochs;
  std::vector<StepLog> logs;  // every user-day, in training order
};

/// Sequential: users in id order within an epoch, temperature T0 * decay^e.
AgentTraining train_agent(const EpisodeEnv& env, const std::vector<UserProfile>& users,
                          std::uint64_t seed);

/// Frozen-table greedy rollouts, all days logged, parallel over users.
std::vector<StepLog> evaluate_policy(const EpisodeEnv& env, const std::vector<UserProfile>& users,
                                     const QTable& table, std::uint64_t seed, int threads = 1);

std::string step_log_jsonl(const StepLog& s);
/// Inverse of step_log_jsonl over a whole file; latent state is not persisted.
std::vector<StepLog> step_logs_from_jsonl(const std::string& text);

}  // namespace esmr
