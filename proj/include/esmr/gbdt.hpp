#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace esmr {

struct GbdtConfig {
  int max_rounds = 200;
  int max_depth = 5;
  double learning_rate = 0.1;
  int bins = 64;
  int min_leaf = 20;
  double l2 = 1.0;
  int patience = 10;
  int threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;
};

/// Boosted regression trees over a logit.
class Gbdt {
 public:
  std::vector<std::string> feature_names;
  double base_score = 0.0;
  std::vector<std::vector<TreeNode>> trees;

  double predict_logit(std::span<const double> x) const;
  /// Strictly inside (0, 1).
  double predict_proba(std::span<const double> x) const;

  std::string to_json(int indent = -1) const;
  static Gbdt from_json(const std::string& text);
};

/// Row-major feature matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct GbdtReport {
  Gbdt model;
  double validation_auc = 0.0;
  int rounds = 0;                  // trees kept
  std::vector<double> auc_history; // validation AUC after every round trained
};

/// Logistic-loss boosting with histogram splits. Stops when validation AUC
/// has not improved for `patience` rounds and keeps the best prefix.
/// Throws if the training labels are single-class.
GbdtReport train_gbdt(const Matrix& train, const std::vector<int>& train_labels,
                      const Matrix& valid, const std::vector<int>& valid_labels,
                      const std::vector<std::string>& names, const GbdtConfig& cfg);

/// Area under the ROC curve with tied scores counted as one half.
/// Throws unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace esmr
