#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "esmr/journal.hpp"

namespace esmr {

struct KMeansOptions {
  int n_init = 4;
  int max_iter = 300;
  double tol = 1e-6;
};

/// K-means fit in standardized feature space.
struct ClusterModel {
  int k = 0;
  std::vector<std::string> feature_names;  // columns kept after dropping zero-variance ones
  std::vector<std::size_t> feature_columns;  // positions of those columns in the input
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  Eigen::MatrixXd centroids;  // k x d, standardized
  double inertia = 0.0;
  int iterations = 0;

  /// Nearest centroid of a raw (unstandardized) input row; ties go to the lower index.
  int assign(std::span<const double> raw_row) const;
  Eigen::MatrixXd raw_centroids() const;
};

/// Lloyd iterations with k-means++ seeding, best of `n_init` restarts.
/// `names` labels the columns of X. Throws if X has fewer than k distinct rows.
ClusterModel fit_kmeans(const Eigen::MatrixXd& X, const std::vector<std::string>& names, int k,
                        std::uint64_t seed, const KMeansOptions& opts = {});

/// Inertia for k = k_min..k_max. Each k is warm-started from the k-1 solution
/// plus one seeded centroid, so the sequence never increases.
std::vector<double> elbow_inertia(const Eigen::MatrixXd& X, int k_min, int k_max,
                                  std::uint64_t seed, const KMeansOptions& opts = {});

/// Cluster index -> emotion. One cluster (smallest raw centroid norm) is
/// churned; the remaining four are matched to happy, excited, stressed and
/// disappointed by the permutation with the best total trait score. Throws if
/// the best permutation is not unique.
std::vector<UserEmotion> map_clusters(const ClusterModel& model);

struct OverrideRules {
  double sharp_drop = -0.3;
  int oscillation_window = 3;
  int oscillation_min_stressed = 2;
};

struct OverrideResult {
  UserEmotion label;
  bool applied = false;
};

/// `history` holds the final labels of the user's earlier days, oldest first.
/// `previous` is the user's previous-day record (nullptr on day 1).
OverrideResult apply_rule_overrides(UserEmotion cluster_label, const DailyRecord& record,
                                    const DailyRecord* previous,
                                    std::span<const UserEmotion> history,
                                    const OverrideRules& rules = {});

struct AffectConfig {
  int k = 5;
  std::vector<std::string> cluster_features = {"watch_rel", "scroll_rel", "likes_rel",
                                               "shares_rel"};
  KMeansOptions kmeans;
  int elbow_min = 2;
  int elbow_max = 10;
  OverrideRules overrides;
  double holdout_fraction = 0.2;
  int epochs = 400;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  // Permits training when a label is absent (tiny smoke runs).
  bool allow_missing_classes = false;
};

struct DayLabel {
  int user_id = 0;
  int day = 1;
  int cluster = 0;
  UserEmotion label = UserEmotion::kChurned;
  bool override_applied = false;
};

struct Labeling {
  ClusterModel model;
  std::vector<UserEmotion> cluster_labels;
  std::vector<double> elbow;  // inertia for k = elbow_min..elbow_max
  std::vector<DayLabel> labels;  // aligned with the dataset records
};

/// Clusters every user-day, maps clusters to emotions, applies overrides in
/// day order and fills the label-derived feature columns of `ds` in place.
Labeling label_dataset(Dataset& ds, const AffectConfig& cfg, std::uint64_t seed);

/// Multinomial logistic regression over standardized continuous features and
/// one-hot categorical fields.
class EmotionClassifier {
 public:
  static constexpr int kInputs = static_cast<int>(kContinuousFeatureCount) + 3 + 5 + 7 + 7;

  EmotionClassifier();
  std::array<double, kUserEmotionCount> predict_proba(const FeatureRow& row) const;
  /// Argmax of predict_proba; ties go to the earlier label.
  UserEmotion predict(const FeatureRow& row) const;

  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& stds() const { return stds_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

  std::string to_json() const;
  static EmotionClassifier from_json(const std::string& text);

 private:
  friend EmotionClassifier fit_classifier(const std::vector<FeatureRow>&,
                                          const std::vector<UserEmotion>&, const AffectConfig&);
  Eigen::VectorXd encode(const FeatureRow& row) const;

  Eigen::VectorXd means_;    // continuous columns
  Eigen::VectorXd stds_;
  Eigen::MatrixXd weights_;  // (kInputs + 1) x 6, last row is the bias
};

/// Full-batch Adam on L2-regularized cross-entropy, starting from zero weights.
EmotionClassifier fit_classifier(const std::vector<FeatureRow>& rows,
                                 const std::vector<UserEmotion>& labels, const AffectConfig& cfg);

using ConfusionMatrix = std::array<std::array<std::int64_t, kUserEmotionCount>, kUserEmotionCount>;

struct ClassifierReport {
  EmotionClassifier model;
  ConfusionMatrix confusion{};  // [true][predicted] on the held-out users
  double accuracy = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

double accuracy(const ConfusionMatrix& m);

/// Splits users into train and held-out sets, fits, and scores the held-out rows.
ClassifierReport train_classifier(const std::vector<FeatureRow>& rows,
                                  const std::vector<UserEmotion>& labels, const AffectConfig& cfg,
                                  std::uint64_t seed);

struct TrajectoryPoint {
  int day = 1;
  UserEmotion dominant = UserEmotion::kChurned;
  std::array<double, kUserEmotionCount> smoothed{};
};

/// Per-day argmax plus a trailing 3-day mean of the class probabilities
/// (the first two days average over what is available).
std::vector<TrajectoryPoint> trajectory(
    const std::vector<std::array<double, kUserEmotionCount>>& daily_probabilities, int first_day = 1);

}  // namespace esmr
