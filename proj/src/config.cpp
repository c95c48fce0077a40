#include "esmr/config.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <set>
#include <type_traits>

#include <json.hpp>

#include "esmr/io.hpp"

namespace esmr {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
struct is_std_array : std::false_type {};
template <typename T, std::size_t N>
struct is_std_array<std::array<T, N>> : std::true_type {};

struct Writer {
  ordered_json& out;

  template <typename T>
  void operator()(const char* key, const T& value) {
    out[key] = value;
  }
  template <typename F>
  void section(const char* key, F&& body) {
    ordered_json sub = ordered_json::object();
    Writer w{sub};
    body(w);
    out[key] = std::move(sub);
  }
};

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

template <typename T>
void read_scalar(const json& j, const std::string& key, T& value) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(key + ": expected true or false");
    value = j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
    if (j.is_number_unsigned()) {
      const auto v = j.get<std::uint64_t>();
      if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        throw ConfigError(key + ": value out of range");
      }
      value = static_cast<T>(v);
    } else {
      const auto v = j.get<std::int64_t>();
      if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
          (v > 0 && static_cast<std::uint64_t>(v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))) {
        throw ConfigError(key + ": value out of range");
      }
      value = static_cast<T>(v);
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(key + ": expected a number");
    value = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(key + ": expected a string");
    value = j.get<std::string>();
  } else if constexpr (is_std_array<T>::value) {
    if (!j.is_array() || j.size() != value.size()) {
      throw ConfigError(key + ": expected an array of " + std::to_string(value.size()) + " values");
    }
    for (std::size_t i = 0; i < value.size(); ++i) read_scalar(j[i], key + "[" + std::to_string(i) + "]", value[i]);
  } else {
    if (!j.is_array()) throw ConfigError(key + ": expected an array");
    T out(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) read_scalar(j[i], key + "[" + std::to_string(i) + "]", out[i]);
    value = std::move(out);
  }
}

struct Reader {
  const json& in;
  std::string path;
  std::set<std::string> known;

  template <typename T>
  void operator()(const char* key, T& value) {
    known.insert(key);
    if (auto it = in.find(key); it != in.end()) read_scalar(*it, join(path, key), value);
  }
  template <typename F>
  void section(const char* key, F&& body) {
    known.insert(key);
    auto it = in.find(key);
    if (it == in.end()) return;
    if (!it->is_object()) throw ConfigError(join(path, key) + ": expected an object");
    Reader r{*it, join(path, key), {}};
    body(r);
    r.finish();
  }
  void finish() const {
    for (auto it = in.begin(); it != in.end(); ++it) {
      if (!known.count(it.key())) throw ConfigError("unknown config key '" + join(path, it.key().c_str()) + "'");
    }
  }
};

template <typename V>
void bind(V& v, CatalogConfig& c) {
  v("size", c.size);
  v("duration_mean", c.duration_mean);
  v("duration_sd", c.duration_sd);
  v("duration_min", c.duration_min);
  v("duration_max", c.duration_max);
  v("emotion_probs", c.emotion_probs);
  v("intensity_mean", c.intensity_mean);
  v("intensity_sd", c.intensity_sd);
  v("category_probs", c.category_probs);
  v("theme_probs", c.theme_probs);
  v("base_engagement", c.base_engagement);
  v("short_video_threshold_s", c.short_video_threshold_s);
  v("short_video_bonus", c.short_video_bonus);
  v("virality_min", c.virality_min);
  v("virality_max", c.virality_max);
  v("viral_probability", c.viral_probability);
  v("viral_min", c.viral_min);
  v("viral_max", c.viral_max);
}

template <typename V>
void bind(V& v, TierParams& t) {
  v("gamma_shape", t.gamma_shape);
  v("gamma_scale", t.gamma_scale);
  v("watch_min_s", t.watch_min_s);
  v("watch_max_s", t.watch_max_s);
  v("login_rate", t.login_rate);
  v("churn_propensity_min", t.churn_propensity_min);
  v("churn_propensity_max", t.churn_propensity_max);
  v("dirichlet_favored", t.dirichlet_favored);
  v("dirichlet_other", t.dirichlet_other);
  v("likes_log_mean", t.likes_log_mean);
  v("likes_log_sd", t.likes_log_sd);
  v("post_mean", t.post_mean);
}

template <typename V>
void bind(V& v, MoodDynamics& m) {
  v("valence_persistence", m.valence_persistence);
  v("exposure_gain", m.exposure_gain);
  v("valence_noise", m.valence_noise);
  v("baseline_mean", m.baseline_mean);
  v("baseline_sd", m.baseline_sd);
  v("initial_valence_sd", m.initial_valence_sd);
  v("arousal_persistence", m.arousal_persistence);
  v("arousal_noise", m.arousal_noise);
  v("arousal_rest", m.arousal_rest);
  v("momentum_gain", m.momentum_gain);
  v("resilience_gain", m.resilience_gain);
  v("resilience_erosion", m.resilience_erosion);
  v("resilience_damping", m.resilience_damping);
  v("noise_damping", m.noise_damping);
  v("initial_resilience_min", m.initial_resilience_min);
  v("initial_resilience_max", m.initial_resilience_max);
  v("arousal_low", m.arousal_low);
  v("arousal_high", m.arousal_high);
}

template <typename V>
void bind(V& v, PopulationConfig& p) {
  v("size", p.size);
  v("horizon_days", p.horizon_days);
  v("tier_probs", p.tier_probs);
  v.section("tiers", [&](auto& s) {
    for (std::size_t t = 0; t < kTierCount; ++t) {
      const std::string_view name = to_string(static_cast<Tier>(t));
      s.section(name.data(), [&](auto& w) { bind(w, p.tiers[t]); });
    }
  });
  v("spike_days_per_user", p.spike_days_per_user);
  v("spike_min", p.spike_min);
  v("spike_max", p.spike_max);
  v("weekend_multiplier", p.weekend_multiplier);
  v("churn_sensitivity", p.churn_sensitivity);
  v("churn_bias", p.churn_bias);
  v("reengage_probability", p.reengage_probability);
  v("post_dispersion", p.post_dispersion);
  v("post_burst", p.post_burst);
  v("likes_watch_elasticity", p.likes_watch_elasticity);
  v("comment_probability", p.comment_probability);
  v("share_probability", p.share_probability);
  v("activity_window_minutes", p.activity_window_minutes);
  v.section("mood", [&](auto& s) { bind(s, p.mood); });
  v.section("coupling", [&](auto& s) {
    s("watch", p.coupling.watch);
    s("scroll", p.coupling.scroll);
    s("likes", p.coupling.likes);
  });
}

template <typename V>
void bind(V& v, JournalConfig& c) {
  v("top_fraction", c.top_fraction);
  v("recency_days", c.recency_days);
  v("skip_min", c.skip_min);
  v("skip_max", c.skip_max);
  v("mean_video_s", c.mean_video_s);
  v("partial_min", c.partial_min);
  v("partial_max", c.partial_max);
  v("warmup_days", c.warmup_days);
  v("tau", c.tau);
  v.section("weights", [&](auto& s) {
    s("watch", c.weights.watch);
    s("scroll", c.weights.scroll);
    s("logins", c.weights.logins);
    s("posts", c.weights.posts);
    s("likes", c.weights.likes);
    s("comments", c.weights.comments);
    s("shares", c.weights.shares);
    s("watch_norm_s", c.weights.watch_norm_s);
    s("scroll_norm_s", c.weights.scroll_norm_s);
  });
}

template <typename V>
void bind(V& v, AffectConfig& c) {
  v("k", c.k);
  v("cluster_features", c.cluster_features);
  v.section("kmeans", [&](auto& s) {
    s("n_init", c.kmeans.n_init);
    s("max_iter", c.kmeans.max_iter);
    s("tol", c.kmeans.tol);
  });
  v("elbow_min", c.elbow_min);
  v("elbow_max", c.elbow_max);
  v.section("overrides", [&](auto& s) {
    s("sharp_drop", c.overrides.sharp_drop);
    s("oscillation_window", c.overrides.oscillation_window);
    s("oscillation_min_stressed", c.overrides.oscillation_min_stressed);
  });
  v("holdout_fraction", c.holdout_fraction);
  v("epochs", c.epochs);
  v("learning_rate", c.learning_rate);
  v("l2", c.l2);
  v("allow_missing_classes", c.allow_missing_classes);
}

template <typename V>
void bind(V& v, PolicyConfig& c) {
  v.section("scorer", [&](auto& s) {
    s("max_rounds", c.scorer.gbdt.max_rounds);
    s("max_depth", c.scorer.gbdt.max_depth);
    s("learning_rate", c.scorer.gbdt.learning_rate);
    s("bins", c.scorer.gbdt.bins);
    s("min_leaf", c.scorer.gbdt.min_leaf);
    s("l2", c.scorer.gbdt.l2);
    s("patience", c.scorer.gbdt.patience);
    s("validation_fraction", c.scorer.validation_fraction);
    s("max_rows", c.scorer.max_rows);
  });
  AgentConfig& a = c.agent;
  v("learning_rate", a.learning_rate);
  v("discount", a.discount);
  v("epochs", a.epochs);
  v("replay", a.replay_capacity);
  v("replay_batch", a.replay_batch);
  v("temperature", a.temperature);
  v("temperature_decay", a.temperature_decay);
  v("vulnerable_streak", a.vulnerable_streak);
  v("engagement_weight", a.reward.engagement);
  v("alpha_emo", a.reward.alpha_emo);
  v("eta", a.reward.eta);
  v("beta", a.reward.beta);
  v("amplification", a.reward.amplification);
  v("reward_targets", a.reward_targets);
}

template <typename V>
void bind(V& v, RunConfig& c) {
  v.section("catalog", [&](auto& s) { bind(s, c.catalog); });
  v.section("population", [&](auto& s) { bind(s, c.population); });
  v.section("journal", [&](auto& s) { bind(s, c.journal); });
  v.section("affect", [&](auto& s) { bind(s, c.affect); });
  v.section("causal", [&](auto& s) { s("prune_threshold", c.causal.prune_threshold); });
  v.section("policy", [&](auto& s) { bind(s, c.policy); });
  v.section("bench", [&](auto& s) { s("variants", c.bench.variants); });
  v("seed", c.seed);
  v("output_dir", c.output_dir);
}

void require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError(key + ": " + rule);
}

template <std::size_t N>
void require_probs(const std::array<double, N>& p, const std::string& key) {
  double sum = 0.0;
  for (double x : p) {
    require(x >= 0.0, key, "entries must be >= 0");
    sum += x;
  }
  require(sum > 0.0, key, "entries must not all be zero");
}

}  // namespace

std::string config_to_json(const RunConfig& cfg, int indent) {
  RunConfig copy = cfg;
  ordered_json out = ordered_json::object();
  Writer w{out};
  bind(w, copy);
  return out.dump(indent);
}

RunConfig config_from_json(const std::string& text) {
  json in;
  try {
    in = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!in.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  Reader r{in, "", {}};
  bind(r, cfg);
  r.finish();
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& c) {
  require(c.catalog.size >= 1, "catalog.size", "must be >= 1");
  require(c.catalog.duration_min > 0.0 && c.catalog.duration_min <= c.catalog.duration_max,
          "catalog.duration_min", "must be positive and <= duration_max");
  require_probs(c.catalog.emotion_probs, "catalog.emotion_probs");
  require_probs(c.catalog.category_probs, "catalog.category_probs");
  require_probs(c.catalog.theme_probs, "catalog.theme_probs");
  require(c.catalog.virality_min <= c.catalog.virality_max, "catalog.virality_min", "must be <= virality_max");
  require(c.catalog.viral_probability >= 0.0 && c.catalog.viral_probability <= 1.0,
          "catalog.viral_probability", "must lie in [0, 1]");

  const PopulationConfig& p = c.population;
  require(p.size >= 1, "population.size", "must be >= 1");
  require(p.horizon_days >= 1, "population.horizon_days", "must be >= 1");
  require_probs(p.tier_probs, "population.tier_probs");
  for (std::size_t t = 0; t < kTierCount; ++t) {
    const std::string key = "population.tiers." + std::string(to_string(static_cast<Tier>(t)));
    const TierParams& tp = p.tiers[t];
    require(tp.gamma_shape > 0.0 && tp.gamma_scale > 0.0, key + ".gamma_shape", "gamma parameters must be > 0");
    require(tp.watch_min_s >= 0.0 && tp.watch_min_s < tp.watch_max_s, key + ".watch_min_s",
            "must be >= 0 and < watch_max_s");
    require(tp.login_rate >= 0.0, key + ".login_rate", "must be >= 0");
    require(tp.churn_propensity_min <= tp.churn_propensity_max, key + ".churn_propensity_min",
            "must be <= churn_propensity_max");
    require(tp.dirichlet_favored > 0.0 && tp.dirichlet_other > 0.0, key + ".dirichlet_favored",
            "Dirichlet concentrations must be > 0");
    require(tp.likes_log_sd >= 0.0, key + ".likes_log_sd", "must be >= 0");
    require(tp.post_mean >= 0.0, key + ".post_mean", "must be >= 0");
  }
  require(p.spike_days_per_user >= 0, "population.spike_days_per_user", "must be >= 0");
  require(p.spike_min <= p.spike_max, "population.spike_min", "must be <= spike_max");
  require(p.reengage_probability >= 0.0 && p.reengage_probability <= 1.0, "population.reengage_probability",
          "must lie in [0, 1]");
  require(p.comment_probability >= 0.0 && p.comment_probability <= 1.0, "population.comment_probability",
          "must lie in [0, 1]");
  require(p.share_probability >= 0.0 && p.share_probability <= 1.0, "population.share_probability",
          "must lie in [0, 1]");
  require(p.post_dispersion > 0.0, "population.post_dispersion", "must be > 0");
  require(p.mood.valence_persistence >= 0.0 && p.mood.valence_persistence <= 1.0,
          "population.mood.valence_persistence", "must lie in [0, 1]");
  require(p.mood.arousal_persistence >= 0.0 && p.mood.arousal_persistence <= 1.0,
          "population.mood.arousal_persistence", "must lie in [0, 1]");
  require(p.mood.arousal_low < p.mood.arousal_high, "population.mood.arousal_low", "must be < arousal_high");
  require(p.mood.initial_resilience_min <= p.mood.initial_resilience_max, "population.mood.initial_resilience_min",
          "must be <= initial_resilience_max");

  const JournalConfig& j = c.journal;
  require(j.top_fraction >= 0.0 && j.top_fraction <= 1.0, "journal.top_fraction", "must lie in [0, 1]");
  require(j.recency_days >= 0, "journal.recency_days", "must be >= 0");
  require(j.skip_min >= 0.0 && j.skip_min <= j.skip_max && j.skip_max <= 1.0, "journal.skip_min",
          "need 0 <= skip_min <= skip_max <= 1");
  require(j.mean_video_s > 0.0, "journal.mean_video_s", "must be > 0");
  require(j.partial_min >= 0.0 && j.partial_min <= j.partial_max && j.partial_max <= 1.0, "journal.partial_min",
          "need 0 <= partial_min <= partial_max <= 1");
  require(j.warmup_days >= 1, "journal.warmup_days", "must be >= 1");
  require(j.weights.watch_norm_s > 0.0 && j.weights.scroll_norm_s > 0.0, "journal.weights.watch_norm_s",
          "normalizers must be > 0");

  const AffectConfig& a = c.affect;
  require(a.k == 5, "affect.k", "the cluster mapping needs exactly 5 clusters");
  require(!a.cluster_features.empty(), "affect.cluster_features", "must not be empty");
  for (const auto& name : a.cluster_features) {
    bool found = false;
    for (auto n : kContinuousFeatureNames) found = found || n == name;
    require(found, "affect.cluster_features", "unknown feature '" + name + "'");
  }
  require(a.kmeans.n_init >= 1 && a.kmeans.max_iter >= 1 && a.kmeans.tol > 0.0, "affect.kmeans",
          "n_init, max_iter must be >= 1 and tol > 0");
  require(a.elbow_min >= 1 && a.elbow_min <= a.elbow_max, "affect.elbow_min", "need 1 <= elbow_min <= elbow_max");
  require(a.overrides.sharp_drop < 0.0, "affect.overrides.sharp_drop", "must be < 0");
  require(a.overrides.oscillation_window >= 1, "affect.overrides.oscillation_window", "must be >= 1");
  require(a.holdout_fraction > 0.0 && a.holdout_fraction < 1.0, "affect.holdout_fraction", "must lie in (0, 1)");
  require(a.epochs >= 1, "affect.epochs", "must be >= 1");
  require(a.learning_rate > 0.0, "affect.learning_rate", "must be > 0");
  require(a.l2 >= 0.0, "affect.l2", "must be >= 0");

  require(c.causal.prune_threshold >= 0.0, "causal.prune_threshold", "must be >= 0");

  const ScorerConfig& s = c.policy.scorer;
  require(s.gbdt.max_rounds >= 1, "policy.scorer.max_rounds", "must be >= 1");
  require(s.gbdt.max_depth >= 1, "policy.scorer.max_depth", "must be >= 1");
  require(s.gbdt.learning_rate > 0.0, "policy.scorer.learning_rate", "must be > 0");
  require(s.gbdt.bins >= 2 && s.gbdt.bins <= 256, "policy.scorer.bins", "must lie in [2, 256]");
  require(s.gbdt.min_leaf >= 1, "policy.scorer.min_leaf", "must be >= 1");
  require(s.gbdt.l2 >= 0.0, "policy.scorer.l2", "must be >= 0");
  require(s.gbdt.patience >= 1, "policy.scorer.patience", "must be >= 1");
  require(s.validation_fraction > 0.0 && s.validation_fraction < 1.0, "policy.scorer.validation_fraction",
          "must lie in (0, 1)");
  const AgentConfig& g = c.policy.agent;
  require(g.learning_rate > 0.0 && g.learning_rate <= 1.0, "policy.learning_rate", "must lie in (0, 1]");
  require(g.discount >= 0.0 && g.discount < 1.0, "policy.discount", "must lie in [0, 1)");
  require(g.epochs >= 1, "policy.epochs", "must be >= 1");
  require(g.replay_capacity >= 1, "policy.replay", "must be >= 1");
  require(g.temperature > 0.0, "policy.temperature", "must be > 0");
  require(g.temperature_decay > 0.0 && g.temperature_decay < 1.0, "policy.temperature_decay",
          "must lie in (0, 1) so the temperature strictly decreases");
  require(g.vulnerable_streak >= 1, "policy.vulnerable_streak", "must be >= 1");
  require(g.reward.amplification >= 0.0, "policy.amplification", "must be >= 0");
  require(!g.reward_targets.empty(), "policy.reward_targets", "must not be empty");
  for (const auto& t : g.reward_targets) {
    bool found = false;
    for (auto n : kCausalTargets) found = found || n == t;
    require(found, "policy.reward_targets", "unknown target '" + t + "'");
  }

  static const std::array<std::string_view, 4> kVariants = {"full", "emotion_off", "engagement_off",
                                                            "scorer_only"};
  std::set<std::string> seen;
  for (const auto& v : c.bench.variants) {
    require(std::find(kVariants.begin(), kVariants.end(), v) != kVariants.end(), "bench.variants",
            "unknown variant '" + v + "'");
    require(seen.insert(v).second, "bench.variants", "variant '" + v + "' listed twice");
  }
  require(seen.count("full") == 1, "bench.variants", "must include 'full'");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
}

void apply_smoke(RunConfig& cfg) {
  cfg.population.size = 50;
  cfg.catalog.size = 100;
  cfg.population.horizon_days = 10;
  // Fifty users over ten days cannot promise every label in training.
  cfg.affect.allow_missing_classes = true;
}

std::string config_hash(const RunConfig& cfg) {
  RunConfig copy = cfg;
  copy.seed = 0;
  copy.output_dir.clear();
  return sha256_hex(config_to_json(copy, -1));
}

}  // namespace esmr
