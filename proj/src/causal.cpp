#include "esmr/causal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace esmr {

std::array<double, kCausalFeatureCount> causal_features(const FeatureRow& row, UserEmotion label) {
  std::array<double, kCausalFeatureCount> out{};
  const double watch = row.continuous[continuous_index("watch_s")];
  for (std::size_t j = 0; j + 1 < kCausalFeatureCount; ++j) {
    const std::string_view name = kCausalFeatureNames[j];
    if (name.starts_with("share_")) {
      // Fraction of the day's watch time spent in one category.
      const std::string column = "time_" + std::string(name.substr(6));
      out[j] = watch > 0.0 ? row.continuous[continuous_index(column)] / watch : 0.0;
    } else {
      out[j] = row.continuous[continuous_index(name)];
    }
  }
  out[kCausalFeatureCount - 1] = valence(label);
  return out;
}

CausalDataset build_causal_dataset(const std::vector<DailyRecord>& records,
                                   const std::vector<FeatureRow>& features,
                                   const std::vector<UserEmotion>& labels) {
  if (records.size() != features.size() || records.size() != labels.size()) {
    throw Error("records, features and labels differ in length");
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = records[i + 1];
    if (a.user_id != b.user_id || b.day != a.day + 1) continue;
    if (a.churned || b.churned) continue;
    rows.push_back(i);
  }
  if (rows.empty()) throw Error("no consecutive active day pairs for causal discovery");
  CausalDataset ds;
  for (auto n : kCausalFeatureNames) ds.columns.emplace_back(n);
  for (auto n : kCausalTargets) ds.columns.emplace_back(n);
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    const auto f = causal_features(features[i], labels[i]);
    for (std::size_t j = 0; j < kCausalFeatureCount; ++j) ds.X(ri, static_cast<Eigen::Index>(j)) = f[j];
    const UserEmotion next = labels[i + 1];
    const auto t0 = static_cast<Eigen::Index>(kCausalFeatureCount);
    ds.X(ri, t0) = next == UserEmotion::kHappy ? 1.0 : 0.0;
    ds.X(ri, t0 + 1) = next == UserEmotion::kStressed ? 1.0 : 0.0;
    ds.X(ri, t0 + 2) = valence(next) - valence(labels[i]);
    ds.user_ids.push_back(records[i].user_id);
    ds.days.push_back(records[i].day);
  }
  return ds;
}

namespace {

// Maximum-entropy approximation of differential entropy for a unit-variance variable.
double entropy(const Eigen::VectorXd& u) {
  constexpr double k1 = 79.047;
  constexpr double k2 = 7.4129;
  constexpr double gamma = 0.37457;
  double logcosh = 0.0;
  double gauss = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double x = u(i);
    const double ax = std::abs(x);
    // log(cosh(x)) without overflow.
    logcosh += ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
    gauss += x * std::exp(-0.5 * x * x);
  }
  const auto n = static_cast<double>(u.size());
  logcosh /= n;
  gauss /= n;
  return (1.0 + std::log(2.0 * std::numbers::pi)) / 2.0 - k1 * (logcosh - gamma) * (logcosh - gamma) -
         k2 * gauss * gauss;
}

double population_sd(const Eigen::VectorXd& x) {
  return std::sqrt((x.array() - x.mean()).square().mean());
}

Eigen::VectorXd standardized(const Eigen::VectorXd& x) {
  const double sd = population_sd(x);
  return (x.array() - x.mean()) / sd;
}

// Residual of xi after regressing on xj (both centered).
Eigen::VectorXd residual(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj) {
  const double var = xj.squaredNorm();
  if (var <= 0.0) return xi;
  return xi - (xi.dot(xj) / var) * xj;
}

double unit_entropy(const Eigen::VectorXd& r) {
  const double sd = population_sd(r);
  if (sd <= 1e-12) return 0.0;
  return entropy(r / sd);
}

std::size_t search_exogenous(const Eigen::MatrixXd& X, const std::vector<std::size_t>& U) {
  if (U.size() == 1) return U.front();
  std::vector<Eigen::VectorXd> z;
  std::vector<double> h;
  for (std::size_t i : U) {
    z.push_back(standardized(X.col(static_cast<Eigen::Index>(i))));
    h.push_back(entropy(z.back()));
  }
  std::vector<double> score(U.size(), 0.0);
  for (std::size_t a = 0; a < U.size(); ++a) {
    for (std::size_t b = a + 1; b < U.size(); ++b) {
      const double ha = unit_entropy(residual(z[a], z[b]));
      const double hb = unit_entropy(residual(z[b], z[a]));
      // Positive when a -> b fits better than b -> a.
      const double diff = (h[b] + ha) - (h[a] + hb);
      score[a] += std::pow(std::min(0.0, diff), 2);
      score[b] += std::pow(std::min(0.0, -diff), 2);
    }
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < U.size(); ++a) {
    if (score[a] < score[best]) best = a;
  }
  return U[best];
}

// Names the columns taking part in an exact linear dependency, if any.
void check_collinearity(const Eigen::MatrixXd& Z, const std::vector<std::string>& names) {
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    if (j == 0) continue;
    const Eigen::MatrixXd prev = Z.leftCols(j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(prev);
    const Eigen::VectorXd coef = qr.solve(Z.col(j));
    const double resid = (Z.col(j) - prev * coef).norm() / std::sqrt(static_cast<double>(Z.rows()));
    if (resid < 1e-8) {
      std::ostringstream msg;
      msg << "singular regression: column '" << names[static_cast<std::size_t>(j)]
          << "' is a linear combination of";
      for (Eigen::Index c = 0; c < j; ++c) {
        if (std::abs(coef(c)) > 1e-8) msg << " '" << names[static_cast<std::size_t>(c)] << "'";
      }
      throw Error(msg.str());
    }
  }
}

}  // namespace

CausalGraph direct_lingam(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                          const LingamOptions& opts) {
  const auto d = static_cast<std::size_t>(X.cols());
  if (names.size() != d) throw Error("column name count does not match the data");
  if (X.rows() <= X.cols()) throw Error("causal discovery needs more rows than columns");
  Eigen::MatrixXd Z(X.rows(), X.cols());
  Eigen::VectorXd sd(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    sd(j) = population_sd(X.col(j));
    if (sd(j) <= 1e-12) {
      throw Error("column '" + names[static_cast<std::size_t>(j)] + "' is constant");
    }
    Z.col(j) = (X.col(j).array() - X.col(j).mean()) / sd(j);
  }
  check_collinearity(Z, names);

  std::vector<char> is_sink(d, 0);
  for (std::size_t s : opts.sinks) {
    if (s >= d) throw Error("sink index out of range");
    is_sink[s] = 1;
  }
  std::vector<std::size_t> U;
  for (std::size_t i = 0; i < d; ++i) {
    if (!is_sink[i]) U.push_back(i);
  }
  CausalGraph g;
  g.names = names;
  Eigen::MatrixXd R = Z;
  while (!U.empty()) {
    const std::size_t m = search_exogenous(R, U);
    for (std::size_t i : U) {
      if (i != m) {
        R.col(static_cast<Eigen::Index>(i)) =
            residual(R.col(static_cast<Eigen::Index>(i)), R.col(static_cast<Eigen::Index>(m)));
      }
    }
    g.causal_order.push_back(m);
    U.erase(std::find(U.begin(), U.end(), m));
  }
  const std::size_t non_sinks = g.causal_order.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (is_sink[i]) g.causal_order.push_back(i);
  }

  g.B_std = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (std::size_t p = 1; p < d; ++p) {
    const std::size_t target = g.causal_order[p];
    // Sinks only take parents among the non-sink variables.
    const std::size_t n_pred = std::min(p, non_sinks);
    Eigen::MatrixXd P(Z.rows(), static_cast<Eigen::Index>(n_pred));
    for (std::size_t q = 0; q < n_pred; ++q) {
      P.col(static_cast<Eigen::Index>(q)) = Z.col(static_cast<Eigen::Index>(g.causal_order[q]));
    }
    const Eigen::VectorXd coef = P.colPivHouseholderQr().solve(Z.col(static_cast<Eigen::Index>(target)));
    for (std::size_t q = 0; q < n_pred; ++q) {
      const double w = coef(static_cast<Eigen::Index>(q));
      if (std::abs(w) >= opts.prune_threshold) {
        g.B_std(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(g.causal_order[q])) = w;
      }
    }
  }
  g.stds = sd;
  g.B = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) g.B(i, j) = g.B_std(i, j) * sd(i) / sd(j);
  }
  return g;
}

CausalGraph discover(const CausalDataset& data, double prune_threshold) {
  LingamOptions opts;
  opts.prune_threshold = prune_threshold;
  for (std::size_t t = 0; t < kCausalTargets.size(); ++t) opts.sinks.push_back(kCausalFeatureCount + t);
  return direct_lingam(data.X, data.columns, opts);
}

bool validate_dag(const Eigen::MatrixXd& B, const std::vector<std::size_t>& order) {
  const auto d = static_cast<std::size_t>(B.rows());
  if (B.cols() != B.rows() || order.size() != d) return false;
  std::vector<std::size_t> position(d, d);
  for (std::size_t p = 0; p < d; ++p) {
    if (order[p] >= d || position[order[p]] != d) return false;
    position[order[p]] = p;
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0 &&
          position[j] >= position[i]) {
        return false;
      }
    }
  }
  return true;
}

bool validate_dag(const CausalGraph& g) { return validate_dag(g.B_std, g.causal_order); }

const CausalParent* ParentSet::find(std::string_view feature) const {
  for (const auto& p : parents) {
    if (p.feature == feature) return &p;
  }
  return nullptr;
}

ParentSet extract_parents(const CausalGraph& g, std::string_view target) {
  const auto it = std::find(g.names.begin(), g.names.end(), target);
  if (it == g.names.end()) throw Error("unknown causal target '" + std::string(target) + "'");
  const auto t = static_cast<Eigen::Index>(it - g.names.begin());
  ParentSet out;
  out.target = std::string(target);
  double total = 0.0;
  for (Eigen::Index j = 0; j < g.B_std.cols(); ++j) {
    const double w = g.B_std(t, j);
    if (w == 0.0) continue;
    const double scale = g.stds.size() == g.B_std.cols() ? g.stds(j) : 1.0;
    out.parents.push_back(CausalParent{g.names[static_cast<std::size_t>(j)], w, w, scale});
    total += std::abs(w);
  }
  for (auto& p : out.parents) p.weight = p.raw_weight / total;
  std::sort(out.parents.begin(), out.parents.end(), [](const CausalParent& a, const CausalParent& b) {
    if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) > std::abs(b.weight);
    return a.feature < b.feature;
  });
  return out;
}

std::string parents_to_json(const std::vector<ParentSet>& sets) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : sets) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : s.parents) {
      arr.push_back({{"feature", p.feature},
                     {"weight", p.weight},
                     {"sign", p.weight > 0 ? 1 : -1},
                     {"edge_weight", p.raw_weight},
                     {"scale", p.scale}});
    }
    j[s.target] = arr;
  }
  return j.dump(2) + "\n";
}

std::vector<ParentSet> parents_from_json(const std::string& text) {
  std::vector<ParentSet> out;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    for (const auto& [target, arr] : j.items()) {
      ParentSet s;
      s.target = target;
      for (const auto& p : arr) {
        s.parents.push_back(CausalParent{p.at("feature").get<std::string>(),
                                         p.at("weight").get<double>(),
                                         p.at("edge_weight").get<double>(), p.value("scale", 1.0)});
      }
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("parents json: ") + e.what());
  }
  return out;
}

std::string edges_csv(const CausalGraph& g) {
  std::ostringstream out;
  out.precision(17);
  out << "src,dst,weight\n";
  for (std::size_t i = 0; i < g.names.size(); ++i) {
    for (std::size_t j = 0; j < g.names.size(); ++j) {
      const double w = g.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) out << g.names[j] << ',' << g.names[i] << ',' << w << '\n';
    }
  }
  return out.str();
}

}  // namespace esmr
