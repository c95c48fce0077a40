#include "esmr/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <json.hpp>

#include "esmr/parallel.hpp"
#include "esmr/types.hpp"

namespace esmr {

namespace {

using json = nlohmann::json;

double logistic(double z) {
  z = std::clamp(z, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-z));
}

/// Cut points per feature; bin(x) = number of cut points strictly below x.
std::vector<double> cut_points(const Matrix& m, std::size_t col, int bins) {
  std::vector<double> v(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) v[r] = m.data[r * m.cols + col];
  std::sort(v.begin(), v.end());
  std::vector<double> uniq = v;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> cuts;
  if (uniq.size() <= static_cast<std::size_t>(bins)) {
    cuts.assign(uniq.begin(), uniq.end());
    if (!cuts.empty()) cuts.pop_back();
    return cuts;
  }
  for (int j = 0; j + 1 < bins; ++j) {
    const std::size_t pos = (static_cast<std::size_t>(j) + 1) * v.size() / bins - 1;
    if (cuts.empty() || v[pos] > cuts.back()) cuts.push_back(v[pos]);
  }
  if (!cuts.empty() && cuts.back() >= uniq.back()) cuts.pop_back();
  return cuts;
}

struct Split {
  int feature = -1;
  int bin = -1;
  double gain = 0.0;
};

struct Grower {
  const std::vector<std::uint8_t>& binned;  // row-major rows x cols
  std::size_t cols;
  const std::vector<std::vector<double>>& cuts;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const GbdtConfig& cfg;

  double score(double g, double h) const { return g * g / (h + cfg.l2); }

  Split best_split(const std::vector<std::size_t>& rows, double g_total, double h_total) const {
    std::vector<Split> per_feature(cols);
    parallel_for(cols, cfg.threads, [&](std::size_t f) {
      const std::size_t nb = cuts[f].size() + 1;
      if (nb < 2) return;
      std::vector<double> g(nb, 0.0), h(nb, 0.0);
      std::vector<std::size_t> n(nb, 0);
      for (std::size_t r : rows) {
        const std::uint8_t b = binned[r * cols + f];
        g[b] += grad[r];
        h[b] += hess[r];
        ++n[b];
      }
      const double parent = score(g_total, h_total);
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      Split best;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += g[b];
        hl += h[b];
        nl += n[b];
        const std::size_t nr = rows.size() - nl;
        if (nl < static_cast<std::size_t>(cfg.min_leaf)) continue;
        if (nr < static_cast<std::size_t>(cfg.min_leaf)) break;
        const double gain = score(gl, hl) + score(g_total - gl, h_total - hl) - parent;
        if (gain > best.gain + 1e-12) best = Split{static_cast<int>(f), static_cast<int>(b), gain};
      }
      per_feature[f] = best;
    });
    Split best;
    for (const Split& s : per_feature) {
      if (s.feature >= 0 && s.gain > best.gain + 1e-12) best = s;
    }
    return best;
  }

  int grow(std::vector<TreeNode>& nodes, const std::vector<std::size_t>& rows, int depth) const {
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += grad[r];
      h += hess[r];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[id].value = -cfg.learning_rate * g / (h + cfg.l2);
    if (depth >= cfg.max_depth || rows.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
      return id;
    }
    const Split s = best_split(rows, g, h);
    if (s.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (binned[r * cols + s.feature] <= s.bin ? left : right).push_back(r);
    }
    nodes[id].feature = s.feature;
    nodes[id].threshold = cuts[s.feature][s.bin];
    const int l = grow(nodes, left, depth + 1);
    nodes[id].left = l;
    const int r = grow(nodes, right, depth + 1);
    nodes[id].right = r;
    return id;
  }
};

double tree_value(const std::vector<TreeNode>& nodes, std::span<const double> x) {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return nodes[i].value;
}

}  // namespace

double Gbdt::predict_logit(std::span<const double> x) const {
  if (!trees.empty() && x.size() != feature_names.size()) {
    throw Error("scorer expects " + std::to_string(feature_names.size()) + " features, got " +
                std::to_string(x.size()));
  }
  double z = base_score;
  for (const auto& t : trees) z += tree_value(t, x);
  return z;
}

double Gbdt::predict_proba(std::span<const double> x) const { return logistic(predict_logit(x)); }

std::string Gbdt::to_json(int indent) const {
  json j;
  j["format"] = "esmr-gbdt";
  j["features"] = feature_names;
  j["base_score"] = base_score;
  json ts = json::array();
  for (const auto& t : trees) {
    json nodes = json::array();
    for (const auto& n : t) {
      if (n.feature < 0) {
        nodes.push_back({{"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value}});
      }
    }
    ts.push_back(std::move(nodes));
  }
  j["trees"] = std::move(ts);
  return j.dump(indent);
}

Gbdt Gbdt::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("scorer json: ") + e.what());
  }
  if (j.value("format", "") != "esmr-gbdt") throw Error("scorer json: unexpected format");
  Gbdt m;
  try {
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<double>();
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : t) {
        TreeNode node;
        node.value = n.at("value").get<double>();
        if (n.contains("feature")) {
          node.feature = n.at("feature").get<int>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        }
        nodes.push_back(node);
      }
      m.trees.push_back(std::move(nodes));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("scorer json: ") + e.what());
  }
  // Children always follow their parent, which also rules out cycles.
  for (const auto& t : m.trees) {
    const int size = static_cast<int>(t.size());
    if (size == 0) throw Error("scorer json: empty tree");
    for (int i = 0; i < size; ++i) {
      const TreeNode& n = t[static_cast<std::size_t>(i)];
      if (n.feature >= static_cast<int>(m.feature_names.size()) ||
          (n.feature >= 0 && (n.left <= i || n.left >= size || n.right <= i || n.right >= size))) {
        throw Error("scorer json: malformed tree");
      }
    }
  }
  return m;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("roc_auc: size mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        pos += 1.0;
        rank_sum += mid;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error("roc_auc: needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

GbdtReport train_gbdt(const Matrix& train, const std::vector<int>& train_labels,
                      const Matrix& valid, const std::vector<int>& valid_labels,
                      const std::vector<std::string>& names, const GbdtConfig& cfg) {
  if (train.rows != train_labels.size() || valid.rows != valid_labels.size()) {
    throw Error("train_gbdt: label count does not match rows");
  }
  if (train.cols != names.size() || valid.cols != names.size()) {
    throw Error("train_gbdt: feature count mismatch");
  }
  if (cfg.bins < 2 || cfg.bins > 256) throw ConfigError("policy.scorer.bins must be in [2, 256]");
  if (cfg.max_depth < 1) throw ConfigError("policy.scorer.max_depth must be >= 1");
  if (cfg.max_rounds < 0) throw ConfigError("policy.scorer.max_rounds must be >= 0");
  if (cfg.patience < 1) throw ConfigError("policy.scorer.patience must be >= 1");
  if (cfg.min_leaf < 1) throw ConfigError("policy.scorer.min_leaf must be >= 1");
  const double positives =
      static_cast<double>(std::count(train_labels.begin(), train_labels.end(), 1));
  if (positives == 0.0 || positives == static_cast<double>(train.rows)) {
    throw Error("train_gbdt: training labels are single-class");
  }

  std::vector<std::vector<double>> cuts(train.cols);
  parallel_for(train.cols, cfg.threads, [&](std::size_t c) { cuts[c] = cut_points(train, c, cfg.bins); });
  std::vector<std::uint8_t> binned(train.rows * train.cols);
  for (std::size_t r = 0; r < train.rows; ++r) {
    for (std::size_t c = 0; c < train.cols; ++c) {
      const double x = train.data[r * train.cols + c];
      binned[r * train.cols + c] = static_cast<std::uint8_t>(
          std::lower_bound(cuts[c].begin(), cuts[c].end(), x) - cuts[c].begin());
    }
  }

  GbdtReport rep;
  Gbdt& m = rep.model;
  m.feature_names = names;
  const double p0 = positives / static_cast<double>(train.rows);
  m.base_score = std::log(p0 / (1.0 - p0));

  std::vector<double> f_train(train.rows, m.base_score), f_valid(valid.rows, m.base_score);
  std::vector<double> grad(train.rows), hess(train.rows);
  std::vector<std::size_t> all(train.rows);
  std::iota(all.begin(), all.end(), 0);
  const Grower grower{binned, train.cols, cuts, grad, hess, cfg};

  double best_auc = -1.0;
  int best_rounds = 0;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    for (std::size_t r = 0; r < train.rows; ++r) {
      const double p = logistic(f_train[r]);
      grad[r] = p - train_labels[r];
      hess[r] = std::max(p * (1.0 - p), 1e-12);
    }
    std::vector<TreeNode> tree;
    grower.grow(tree, all, 0);
    for (std::size_t r = 0; r < train.rows; ++r) f_train[r] += tree_value(tree, train.row(r));
    for (std::size_t r = 0; r < valid.rows; ++r) f_valid[r] += tree_value(tree, valid.row(r));
    m.trees.push_back(std::move(tree));
    const double auc = valid.rows > 0 ? roc_auc(f_valid, valid_labels) : 0.5;
    rep.auc_history.push_back(auc);
    if (auc > best_auc + 1e-12) {
      best_auc = auc;
      best_rounds = round + 1;
    } else if (round + 1 - best_rounds >= cfg.patience) {
      break;
    }
  }
  m.trees.resize(static_cast<std::size_t>(best_rounds));
  rep.rounds = best_rounds;
  rep.validation_auc = best_rounds > 0 ? best_auc
                       : valid.rows > 0 ? roc_auc(f_valid, valid_labels)
                                        : 0.5;
  return rep;
}

}  // namespace esmr
