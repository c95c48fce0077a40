#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "esmr/journal.hpp"

namespace esmr {

inline constexpr std::size_t kCausalFeatureCount = 19;
/// Day-t behavioral columns used for discovery. The composite engagement
/// score is left out: it is a fixed linear blend of other columns here.
inline constexpr std::array<std::string_view, kCausalFeatureCount> kCausalFeatureNames = {
    "logins",             "scroll_rel",        "watch_rel",        "delta_e",
    "scroll_watch_ratio", "likes_rel",         "comments",         "shares_rel",
    "posts",              "skip_rate",         "share_educational", "share_entertainment",
    "share_news",         "mean_intensity",    "intensity_change", "mean_video_valence",
    "mean_video_score",   "high_arousal_share", "valence_today"};
/// Day-(t+1) outcomes, appended after the features.
inline constexpr std::array<std::string_view, 3> kCausalTargets = {
    "next_day_happy", "next_day_stressed", "valence_change"};

struct CausalDataset {
  std::vector<std::string> columns;  // features followed by targets
  Eigen::MatrixXd X;                 // one row per consecutive active day pair
  std::vector<int> user_ids;
  std::vector<int> days;             // day t of each pair
};

/// The 19 discovery columns of one day. `label` is that day's emotion.
std::array<double, kCausalFeatureCount> causal_features(const FeatureRow& row, UserEmotion label);

/// Pairs day t with day t+1 of the same user; pairs touching a churned day
/// are dropped. Records must be ordered by (user, day) and aligned with
/// `features` and `labels`. Throws if no pair survives.
CausalDataset build_causal_dataset(const std::vector<DailyRecord>& records,
                                   const std::vector<FeatureRow>& features,
                                   const std::vector<UserEmotion>& labels);

struct LingamOptions {
  double prune_threshold = 0.05;  // on standardized weights
  // Columns forced to the end of the causal order, with no edges between them.
  std::vector<std::size_t> sinks;
};

struct CausalGraph {
  std::vector<std::string> names;
  Eigen::MatrixXd B;      // B(i, j): effect of j on i, raw units
  Eigen::MatrixXd B_std;  // same edges on standardized columns
  Eigen::VectorXd stds;   // column standard deviations of the input
  std::vector<std::size_t> causal_order;
};

/// DirectLiNGAM: repeatedly picks the most exogenous remaining variable by a
/// pairwise likelihood-ratio measure with a log-cosh entropy approximation,
/// then fits B by least squares along the order and prunes small weights.
CausalGraph direct_lingam(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                          const LingamOptions& opts = {});

/// Sinks used by the pipeline: the three outcome columns.
CausalGraph discover(const CausalDataset& data, double prune_threshold = 0.05);

/// True iff B permuted by `order` is strictly lower triangular.
bool validate_dag(const Eigen::MatrixXd& B, const std::vector<std::size_t>& order);
bool validate_dag(const CausalGraph& g);

struct CausalParent {
  std::string feature;
  double weight = 0.0;      // signed, normalized so the absolute weights sum to 1
  double raw_weight = 0.0;  // standardized edge weight before normalization
  double scale = 1.0;       // standard deviation of the feature in the discovery data
};

struct ParentSet {
  std::string target;
  std::vector<CausalParent> parents;  // ordered by decreasing |weight|, ties by name

  const CausalParent* find(std::string_view feature) const;
};

ParentSet extract_parents(const CausalGraph& g, std::string_view target);

std::string parents_to_json(const std::vector<ParentSet>& sets);
std::vector<ParentSet> parents_from_json(const std::string& text);
/// src,dst,weight rows for every nonzero edge (raw units).
std::string edges_csv(const CausalGraph& g);

}  // namespace esmr
