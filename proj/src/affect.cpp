#include "esmr/affect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace esmr {

namespace {

struct LloydResult {
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  int iterations = 0;
};

int nearest(const Eigen::MatrixXd& centroids, const Eigen::RowVectorXd& x, double* dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist != nullptr) *dist = best_d;
  return best;
}

double inertia_of(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    double d = 0.0;
    nearest(centroids, Z.row(i), &d);
    total += d;
  }
  return total;
}

std::size_t count_distinct_rows(const Eigen::MatrixXd& X, std::size_t enough) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(X(i, j));
  }
  std::sort(rows.begin(), rows.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
  return std::min(distinct, enough);
}

// Adds one k-means++ centroid to `centroids` (which may be empty).
Eigen::MatrixXd add_seed(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& centroids, Rng& rng) {
  Eigen::MatrixXd out(centroids.rows() + 1, Z.cols());
  if (centroids.rows() > 0) out.topRows(centroids.rows()) = centroids;
  Eigen::Index pick = 0;
  if (centroids.rows() == 0) {
    pick = static_cast<Eigen::Index>(rng.uniform_int(0, Z.rows() - 1));
  } else {
    std::vector<double> d2(static_cast<std::size_t>(Z.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) nearest(centroids, Z.row(i), &d2[static_cast<std::size_t>(i)]);
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total <= 0.0) throw Error("k-means seeding found no point away from existing centroids");
    pick = static_cast<Eigen::Index>(rng.categorical(d2));
  }
  out.row(out.rows() - 1) = Z.row(pick);
  return out;
}

LloydResult lloyd(const Eigen::MatrixXd& Z, Eigen::MatrixXd centroids, const KMeansOptions& opts) {
  const Eigen::Index k = centroids.rows();
  std::vector<int> assign(static_cast<std::size_t>(Z.rows()), 0);
  LloydResult r;
  for (int it = 1; it <= opts.max_iter; ++it) {
    r.iterations = it;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, Z.cols());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    std::vector<double> dist(static_cast<std::size_t>(Z.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      const int c = nearest(centroids, Z.row(i), &dist[static_cast<std::size_t>(i)]);
      assign[static_cast<std::size_t>(i)] = c;
      sums.row(c) += Z.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    Eigen::MatrixXd next = centroids;
    std::vector<char> taken(static_cast<std::size_t>(Z.rows()), 0);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own centroid.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (!taken[static_cast<std::size_t>(i)] && dist[static_cast<std::size_t>(i)] > far_d) {
          far_d = dist[static_cast<std::size_t>(i)];
          far = i;
        }
      }
      taken[static_cast<std::size_t>(far)] = 1;
      next.row(c) = Z.row(far);
    }
    const double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = next;
    if (shift < opts.tol) break;
  }
  r.centroids = centroids;
  r.inertia = inertia_of(Z, centroids);
  return r;
}

LloydResult best_of(const Eigen::MatrixXd& Z, int k, Rng& rng, const KMeansOptions& opts) {
  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, opts.n_init); ++run) {
    Eigen::MatrixXd init(0, Z.cols());
    for (int c = 0; c < k; ++c) init = add_seed(Z, init, rng);
    LloydResult r = lloyd(Z, init, opts);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

struct Standardized {
  Eigen::MatrixXd Z;
  std::vector<std::size_t> kept;
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
};

Standardized standardize(const Eigen::MatrixXd& X) {
  Standardized s;
  std::vector<double> means;
  std::vector<double> stds;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double m = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - m).square().mean());
    if (sd > 1e-12) {
      s.kept.push_back(static_cast<std::size_t>(j));
      means.push_back(m);
      stds.push_back(sd);
    }
  }
  if (s.kept.empty()) throw Error("every clustering feature has zero variance");
  s.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  s.stds = Eigen::Map<Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
  s.Z.resize(X.rows(), static_cast<Eigen::Index>(s.kept.size()));
  for (std::size_t c = 0; c < s.kept.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    s.Z.col(ci) = (X.col(static_cast<Eigen::Index>(s.kept[c])).array() - s.means(ci)) / s.stds(ci);
  }
  return s;
}

void require_distinct(const Eigen::MatrixXd& X, int k) {
  if (k < 1) throw Error("k must be >= 1");
  const auto need = static_cast<std::size_t>(k);
  if (count_distinct_rows(X, need) < need) {
    throw Error("k-means needs at least " + std::to_string(k) + " distinct rows");
  }
}

}  // namespace

int ClusterModel::assign(std::span<const double> raw_row) const {
  Eigen::RowVectorXd z(static_cast<Eigen::Index>(feature_columns.size()));
  for (std::size_t c = 0; c < feature_columns.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    z(ci) = (raw_row[feature_columns[c]] - means(ci)) / stds(ci);
  }
  return nearest(centroids, z);
}

Eigen::MatrixXd ClusterModel::raw_centroids() const {
  Eigen::MatrixXd raw = centroids;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    raw.col(c) = centroids.col(c).array() * stds(c) + means(c);
  }
  return raw;
}

ClusterModel fit_kmeans(const Eigen::MatrixXd& X, const std::vector<std::string>& names, int k,
                        std::uint64_t seed, const KMeansOptions& opts) {
  if (static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw Error("feature name count does not match the column count");
  }
  require_distinct(X, k);
  const Standardized s = standardize(X);
  Rng rng = Rng::stream(seed, "kmeans", static_cast<std::uint64_t>(k));
  const LloydResult r = best_of(s.Z, k, rng, opts);
  ClusterModel m;
  m.k = k;
  m.feature_columns = s.kept;
  for (std::size_t c : s.kept) m.feature_names.push_back(names[c]);
  m.means = s.means;
  m.stds = s.stds;
  m.centroids = r.centroids;
  m.inertia = r.inertia;
  m.iterations = r.iterations;
  return m;
}

std::vector<double> elbow_inertia(const Eigen::MatrixXd& X, int k_min, int k_max,
                                  std::uint64_t seed, const KMeansOptions& opts) {
  if (k_min < 1 || k_max < k_min) throw Error("invalid elbow range");
  const Standardized s = standardize(X);
  const std::size_t distinct = count_distinct_rows(X, static_cast<std::size_t>(k_max));
  std::vector<double> out;
  Eigen::MatrixXd previous;
  for (int k = k_min; k <= k_max; ++k) {
    if (static_cast<std::size_t>(k) > distinct) {
      // More clusters than distinct points: every point is its own centroid.
      out.push_back(0.0);
      continue;
    }
    Rng rng = Rng::stream(seed, "kmeans-elbow", static_cast<std::uint64_t>(k));
    LloydResult best = best_of(s.Z, k, rng, opts);
    if (previous.rows() == k - 1) {
      const Eigen::MatrixXd warm = add_seed(s.Z, previous, rng);
      LloydResult chained = lloyd(s.Z, warm, opts);
      const double warm_inertia = inertia_of(s.Z, warm);
      if (warm_inertia < chained.inertia) chained = LloydResult{warm, warm_inertia, 0};
      if (chained.inertia < best.inertia) best = std::move(chained);
    }
    previous = best.centroids;
    out.push_back(best.inertia);
  }
  return out;
}

std::vector<UserEmotion> map_clusters(const ClusterModel& model) {
  if (model.k != 5) throw Error("the emotion mapping needs exactly 5 clusters");
  const Eigen::MatrixXd raw = model.raw_centroids();
  int churned = 0;
  for (int c = 1; c < model.k; ++c) {
    if (raw.row(c).norm() < raw.row(churned).norm()) churned = c;
  }
  auto coord = [&](int cluster, std::string_view name) {
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
      if (model.feature_names[j] == name) return model.centroids(cluster, static_cast<Eigen::Index>(j));
    }
    return 0.0;
  };
  // Trait scores in standardized units.
  auto trait = [&](int cluster, UserEmotion e) {
    const double watch = coord(cluster, "watch_rel");
    const double scroll = coord(cluster, "scroll_rel");
    const double likes = coord(cluster, "likes_rel");
    const double shares = coord(cluster, "shares_rel");
    switch (e) {
      case UserEmotion::kHappy: return watch + 0.5 * (likes + shares);
      case UserEmotion::kExcited: return likes + shares;
      case UserEmotion::kStressed: return scroll - watch;
      default: return -(watch + scroll + likes + shares);
    }
  };
  std::vector<int> active;
  for (int c = 0; c < model.k; ++c) {
    if (c != churned) active.push_back(c);
  }
  std::array<UserEmotion, 4> perm = {UserEmotion::kHappy, UserEmotion::kExcited,
                                     UserEmotion::kDisappointed, UserEmotion::kStressed};
  std::sort(perm.begin(), perm.end());
  double best = -std::numeric_limits<double>::infinity();
  double runner_up = -std::numeric_limits<double>::infinity();
  std::array<UserEmotion, 4> best_perm = perm;
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) total += trait(active[i], perm[i]);
    if (total > best) {
      runner_up = best;
      best = total;
      best_perm = perm;
    } else if (total > runner_up) {
      runner_up = total;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best - runner_up < 1e-9) {
    std::ostringstream msg;
    msg << "ambiguous cluster mapping: two assignments score " << best << "; centroids:";
    for (int c = 0; c < model.k; ++c) {
      msg << " [";
      for (Eigen::Index j = 0; j < raw.cols(); ++j) msg << (j ? " " : "") << raw(c, j);
      msg << "]";
    }
    throw Error(msg.str());
  }
  std::vector<UserEmotion> out(static_cast<std::size_t>(model.k), UserEmotion::kChurned);
  for (std::size_t i = 0; i < 4; ++i) out[static_cast<std::size_t>(active[i])] = best_perm[i];
  return out;
}

OverrideResult apply_rule_overrides(UserEmotion cluster_label, const DailyRecord& record,
                                    const DailyRecord* previous,
                                    std::span<const UserEmotion> history,
                                    const OverrideRules& rules) {
  if (record.churned) return {UserEmotion::kChurned, cluster_label != UserEmotion::kChurned};
  if (previous != nullptr && previous->active() &&
      record.delta_e - previous->delta_e < rules.sharp_drop) {
    return {UserEmotion::kStressed, cluster_label != UserEmotion::kStressed};
  }
  if (is_positive(cluster_label)) {
    const std::size_t window =
        std::min(history.size(), static_cast<std::size_t>(std::max(0, rules.oscillation_window)));
    const auto stressed = std::count(history.end() - static_cast<std::ptrdiff_t>(window),
                                     history.end(), UserEmotion::kStressed);
    if (stressed >= rules.oscillation_min_stressed) return {UserEmotion::kFrustrated, true};
  }
  return {cluster_label, false};
}

Labeling label_dataset(Dataset& ds, const AffectConfig& cfg, std::uint64_t seed) {
  if (ds.records.empty()) throw Error("no records to label");
  std::vector<std::size_t> columns;
  for (const auto& name : cfg.cluster_features) columns.push_back(continuous_index(name));
  Eigen::MatrixXd X(static_cast<Eigen::Index>(ds.features.size()),
                    static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = ds.features[i].continuous[columns[c]];
    }
  }
  Labeling out;
  const std::uint64_t kseed = Rng::stream(seed, "affect-kmeans").engine()();
  out.model = fit_kmeans(X, cfg.cluster_features, cfg.k, kseed, cfg.kmeans);
  out.elbow = elbow_inertia(X, cfg.elbow_min, cfg.elbow_max, kseed, cfg.kmeans);
  out.cluster_labels = map_clusters(out.model);

  // Remap the input columns so ClusterModel::assign can read full feature rows.
  ClusterModel full = out.model;
  for (auto& c : full.feature_columns) c = columns[c];
  const auto churned_cluster = static_cast<int>(
      std::find(out.cluster_labels.begin(), out.cluster_labels.end(), UserEmotion::kChurned) -
      out.cluster_labels.begin());
  ClusterModel active_only = full;
  std::vector<int> active_index;
  {
    Eigen::MatrixXd kept(full.k - 1, full.centroids.cols());
    Eigen::Index r = 0;
    for (int c = 0; c < full.k; ++c) {
      if (c == churned_cluster) continue;
      kept.row(r++) = full.centroids.row(c);
      active_index.push_back(c);
    }
    active_only.centroids = kept;
    active_only.k = full.k - 1;
  }

  out.labels.resize(ds.records.size());
  std::vector<UserEmotion> history;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const DailyRecord& rec = ds.records[i];
    const bool first = i == 0 || ds.records[i - 1].user_id != rec.user_id;
    if (first) history.clear();
    const DailyRecord* prev = first ? nullptr : &ds.records[i - 1];
    fill_label_features(ds.features[i], history);
    const auto& row = ds.features[i].continuous;
    int cluster = full.assign(row);
    if (rec.active() && cluster == churned_cluster) {
      cluster = active_index[static_cast<std::size_t>(active_only.assign(row))];
    }
    const UserEmotion base = out.cluster_labels[static_cast<std::size_t>(cluster)];
    const OverrideResult o = apply_rule_overrides(base, rec, prev, history, cfg.overrides);
    out.labels[i] = DayLabel{rec.user_id, rec.day, cluster, o.label, o.applied};
    ds.records[i].dominant_emotion = o.label;
    history.push_back(o.label);
  }
  return out;
}

EmotionClassifier::EmotionClassifier()
    : means_(Eigen::VectorXd::Zero(kContinuousFeatureCount)),
      stds_(Eigen::VectorXd::Ones(kContinuousFeatureCount)),
      weights_(Eigen::MatrixXd::Zero(kInputs + 1, kUserEmotionCount)) {}

Eigen::VectorXd EmotionClassifier::encode(const FeatureRow& row) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kInputs + 1);
  for (std::size_t j = 0; j < kContinuousFeatureCount; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    x(jj) = (row.continuous[j] - means_(jj)) / stds_(jj);
  }
  Eigen::Index offset = kContinuousFeatureCount;
  for (std::size_t c = 0; c < kCategoricalFeatureCount; ++c) {
    const int v = row.categorical[c];
    if (v < 0 || v >= kCategoricalCardinality[c]) {
      throw Error("categorical field '" + std::string(kCategoricalFeatureNames[c]) + "' out of range");
    }
    x(offset + v) = 1.0;
    offset += kCategoricalCardinality[c];
  }
  x(kInputs) = 1.0;
  return x;
}

namespace {

std::array<double, kUserEmotionCount> softmax(const Eigen::VectorXd& logits) {
  std::array<double, kUserEmotionCount> p{};
  const double m = logits.maxCoeff();
  double total = 0.0;
  for (std::size_t c = 0; c < kUserEmotionCount; ++c) {
    p[c] = std::exp(logits(static_cast<Eigen::Index>(c)) - m);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

std::array<double, kUserEmotionCount> EmotionClassifier::predict_proba(const FeatureRow& row) const {
  return softmax(weights_.transpose() * encode(row));
}

UserEmotion EmotionClassifier::predict(const FeatureRow& row) const {
  const auto p = predict_proba(row);
  return kAllUserEmotions[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
}

std::string EmotionClassifier::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "esmr-emotion-classifier";
  j["version"] = 1;
  std::vector<std::string> classes;
  for (auto e : kAllUserEmotions) classes.emplace_back(to_string(e));
  j["classes"] = classes;
  std::vector<std::string> continuous(kContinuousFeatureNames.begin(), kContinuousFeatureNames.end());
  j["continuous"] = continuous;
  j["means"] = std::vector<double>(means_.data(), means_.data() + means_.size());
  j["stds"] = std::vector<double>(stds_.data(), stds_.data() + stds_.size());
  std::vector<std::vector<double>> w;
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) row.push_back(weights_(r, c));
    w.push_back(std::move(row));
  }
  j["weights"] = w;
  return j.dump();
}

EmotionClassifier EmotionClassifier::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "esmr-emotion-classifier") throw Error("not a classifier dump");
  EmotionClassifier m;
  const auto means = j.at("means").get<std::vector<double>>();
  const auto stds = j.at("stds").get<std::vector<double>>();
  const auto w = j.at("weights").get<std::vector<std::vector<double>>>();
  if (means.size() != kContinuousFeatureCount || stds.size() != kContinuousFeatureCount ||
      w.size() != static_cast<std::size_t>(kInputs + 1)) {
    throw Error("classifier dump has the wrong feature dimension");
  }
  for (std::size_t i = 0; i < means.size(); ++i) {
    m.means_(static_cast<Eigen::Index>(i)) = means[i];
    m.stds_(static_cast<Eigen::Index>(i)) = stds[i];
  }
  for (std::size_t r = 0; r < w.size(); ++r) {
    if (w[r].size() != kUserEmotionCount) throw Error("classifier dump has the wrong class count");
    for (std::size_t c = 0; c < kUserEmotionCount; ++c) {
      m.weights_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c];
    }
  }
  return m;
}

EmotionClassifier fit_classifier(const std::vector<FeatureRow>& rows,
                                 const std::vector<UserEmotion>& labels, const AffectConfig& cfg) {
  if (rows.size() != labels.size()) throw Error("rows and labels differ in length");
  if (rows.empty()) throw Error("no training rows");
  std::array<std::size_t, kUserEmotionCount> counts{};
  for (auto l : labels) ++counts[index_of(l)];
  for (std::size_t c = 0; c < kUserEmotionCount; ++c) {
    if (counts[c] == 0 && !cfg.allow_missing_classes) {
      throw Error("class '" + std::string(to_string(kAllUserEmotions[c])) +
                  "' is absent from the training split");
    }
  }
  EmotionClassifier m;
  const auto n = static_cast<Eigen::Index>(rows.size());
  for (std::size_t j = 0; j < kContinuousFeatureCount; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.continuous[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& r : rows) var += (r.continuous[j] - mean) * (r.continuous[j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    m.means_(static_cast<Eigen::Index>(j)) = mean;
    m.stds_(static_cast<Eigen::Index>(j)) = sd > 1e-12 ? sd : 1.0;
  }
  Eigen::MatrixXd X(n, EmotionClassifier::kInputs + 1);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, kUserEmotionCount);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = m.encode(rows[static_cast<std::size_t>(i)]).transpose();
    Y(i, static_cast<Eigen::Index>(index_of(labels[static_cast<std::size_t>(i)]))) = 1.0;
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(X.cols(), kUserEmotionCount);
  Eigen::MatrixXd mom = W;
  Eigen::MatrixXd vel = W;
  const double b1 = 0.9;
  const double b2 = 0.999;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Eigen::MatrixXd P = X * W;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = P.row(i).maxCoeff();
      P.row(i) = (P.row(i).array() - mx).exp();
      P.row(i) /= P.row(i).sum();
    }
    Eigen::MatrixXd grad = X.transpose() * (P - Y) / static_cast<double>(n);
    grad.topRows(X.cols() - 1) += cfg.l2 * W.topRows(X.cols() - 1);
    mom = b1 * mom + (1.0 - b1) * grad;
    vel = b2 * vel + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, epoch);
    const double c2 = 1.0 - std::pow(b2, epoch);
    W.array() -= cfg.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + 1e-8);
  }
  m.weights_ = W;
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  std::int64_t total = 0;
  std::int64_t trace = 0;
  for (std::size_t i = 0; i < kUserEmotionCount; ++i) {
    for (std::size_t j = 0; j < kUserEmotionCount; ++j) total += m[i][j];
    trace += m[i][i];
  }
  return total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
}

ClassifierReport train_classifier(const std::vector<FeatureRow>& rows,
                                  const std::vector<UserEmotion>& labels, const AffectConfig& cfg,
                                  std::uint64_t seed) {
  if (rows.size() != labels.size()) throw Error("rows and labels differ in length");
  std::vector<int> users;
  for (const auto& r : rows) users.push_back(r.user_id);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  if (users.size() < 2) throw Error("the held-out split needs at least two users");
  Rng rng = Rng::stream(seed, "affect-split");
  rng.shuffle(users);
  const auto held = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(cfg.holdout_fraction * static_cast<double>(users.size()))), 1,
      users.size() - 1);
  std::vector<int> test_users(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(held));
  std::sort(test_users.begin(), test_users.end());

  std::vector<FeatureRow> train_rows;
  std::vector<UserEmotion> train_labels;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::binary_search(test_users.begin(), test_users.end(), rows[i].user_id)) {
      test_idx.push_back(i);
    } else {
      train_rows.push_back(rows[i]);
      train_labels.push_back(labels[i]);
    }
  }
  ClassifierReport report;
  report.model = fit_classifier(train_rows, train_labels, cfg);
  report.train_rows = train_rows.size();
  report.test_rows = test_idx.size();
  for (std::size_t i : test_idx) {
    const auto predicted = report.model.predict(rows[i]);
    ++report.confusion[index_of(labels[i])][index_of(predicted)];
  }
  report.accuracy = accuracy(report.confusion);
  return report;
}

std::vector<TrajectoryPoint> trajectory(
    const std::vector<std::array<double, kUserEmotionCount>>& daily, int first_day) {
  if (daily.empty()) throw Error("a trajectory needs at least one day");
  std::vector<TrajectoryPoint> out;
  out.reserve(daily.size());
  for (std::size_t t = 0; t < daily.size(); ++t) {
    TrajectoryPoint p;
    p.day = first_day + static_cast<int>(t);
    const auto& raw = daily[t];
    p.dominant = kAllUserEmotions[static_cast<std::size_t>(std::max_element(raw.begin(), raw.end()) -
                                                            raw.begin())];
    const std::size_t begin = t >= 2 ? t - 2 : 0;
    for (std::size_t s = begin; s <= t; ++s) {
      for (std::size_t c = 0; c < kUserEmotionCount; ++c) p.smoothed[c] += daily[s][c];
    }
    for (double& v : p.smoothed) v /= static_cast<double>(t - begin + 1);
    out.push_back(p);
  }
  return out;
}

}  // namespace esmr
