#include "esmr/population.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esmr {

double UserProfile::expected_likes() const {
  return std::exp(likes_log_mean + 0.5 * likes_log_sd * likes_log_sd);
}

void Exposure::add(VideoEmotion emotion, int video_intensity, double w) {
  const double scaled = w * video_intensity / 10.0;
  weight += w;
  intensity += scaled;
  if (valence_sign(emotion) > 0) {
    positive += scaled;
  } else {
    negative += scaled;
  }
  if (emotion == VideoEmotion::kHappy || emotion == VideoEmotion::kCalm) calm_positive += w;
  if (emotion == VideoEmotion::kAnxious || emotion == VideoEmotion::kStressed ||
      emotion == VideoEmotion::kAngry) {
    negative_arousing += w;
  }
}

std::array<double, 4> mood_quadrants(const AffectState& s, const MoodDynamics& cfg) {
  const double high =
      std::clamp((s.arousal - cfg.arousal_low) / (cfg.arousal_high - cfg.arousal_low), 0.0, 1.0);
  const double pos = std::max(0.0, s.valence);
  const double neg = std::max(0.0, -s.valence);
  return {pos * high, pos * (1.0 - high), neg * high, neg * (1.0 - high)};
}

AffectState initial_affect(const UserProfile& p) {
  return AffectState{p.initial_valence, 0.5, p.initial_resilience};
}

AffectState affect_step(const AffectState& s, const Exposure& exposure, double baseline,
                        const MoodDynamics& cfg, Rng& rng) {
  AffectState next = s;
  double signal = 0.0;
  double arousal_target = cfg.arousal_rest;
  double calm_share = 0.0;
  double harsh_share = 0.0;
  if (exposure.weight > 0.0) {
    const double damp = std::max(0.0, 1.0 - cfg.resilience_damping * s.resilience);
    signal = (exposure.positive - damp * exposure.negative) / exposure.weight;
    arousal_target = exposure.intensity / exposure.weight;
    calm_share = exposure.calm_positive / exposure.weight;
    harsh_share = exposure.negative_arousing / exposure.weight;
  }
  const double phi = cfg.valence_persistence;
  const double noise_scale = cfg.valence_noise * std::max(0.0, 1.0 - cfg.noise_damping * s.resilience);
  next.valence = std::clamp(
      phi * s.valence + (1.0 - phi) * (cfg.exposure_gain * signal + baseline) +
          noise_scale * rng.normal(0.0, 1.0),
      -1.0, 1.0);
  const double rho = cfg.arousal_persistence;
  next.arousal = std::clamp(
      rho * s.arousal + (1.0 - rho) * arousal_target + cfg.arousal_noise * rng.normal(0.0, 1.0),
      0.0, 1.0);
  next.resilience = std::clamp(s.resilience + cfg.resilience_gain * calm_share * (1.0 - s.resilience) -
                                   cfg.resilience_erosion * harsh_share * s.resilience,
                               0.0, 1.0);
  return next;
}

std::vector<UserProfile> generate_users(int n, std::uint64_t seed, const PopulationConfig& cfg) {
  if (n <= 0) throw Error("population size must be >= 1");
  if (cfg.horizon_days < 1) throw ConfigError("population.horizon_days must be >= 1");
  std::vector<UserProfile> users;
  users.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, "population", static_cast<std::uint64_t>(i));
    UserProfile p;
    p.id = i;
    p.tier = static_cast<Tier>(rng.categorical(cfg.tier_probs));
    const TierParams& t = cfg.tiers[index_of(p.tier)];
    p.gamma_shape = t.gamma_shape;
    p.gamma_scale = t.gamma_scale;
    p.watch_min_s = t.watch_min_s;
    p.watch_max_s = t.watch_max_s;
    p.login_rate = t.login_rate;
    p.likes_log_mean = t.likes_log_mean;
    p.likes_log_sd = t.likes_log_sd;
    p.post_mean = t.post_mean;
    p.churn_propensity = rng.uniform(t.churn_propensity_min, t.churn_propensity_max);
    p.favorite_category = static_cast<int>(rng.uniform_int(0, kCategoryCount - 1));
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
      p.dirichlet_alpha[c] = static_cast<int>(c) == p.favorite_category ? t.dirichlet_favored
                                                                        : t.dirichlet_other;
    }
    const int spikes = std::min(cfg.spike_days_per_user, cfg.horizon_days);
    for (std::size_t idx : rng.sample_indices(static_cast<std::size_t>(cfg.horizon_days),
                                              static_cast<std::size_t>(spikes))) {
      p.spike_days.push_back(static_cast<int>(idx) + 1);
    }
    std::sort(p.spike_days.begin(), p.spike_days.end());
    const MoodDynamics& m = cfg.mood;
    p.baseline_valence = rng.normal(m.baseline_mean, m.baseline_sd);
    p.initial_valence = std::clamp(rng.normal(m.baseline_mean, m.initial_valence_sd), -1.0, 1.0);
    p.initial_resilience = rng.uniform(m.initial_resilience_min, m.initial_resilience_max);
    // Morning/midday window and an evening window.
    p.activity_windows = {rng.uniform(360.0, 720.0), rng.uniform(1020.0, 1320.0)};
    users.push_back(std::move(p));
  }
  return users;
}

bool is_weekend(int day) {
  const int r = day % 7;
  return r == 6 || r == 0;
}

double temporal_multiplier(int day, const UserProfile& profile, Rng& rng,
                           const PopulationConfig& cfg) {
  if (day < 1 || day > cfg.horizon_days) {
    throw Error("day " + std::to_string(day) + " outside [1, " +
                std::to_string(cfg.horizon_days) + "]");
  }
  if (std::find(profile.spike_days.begin(), profile.spike_days.end(), day) !=
      profile.spike_days.end()) {
    return rng.uniform(cfg.spike_min, cfg.spike_max);
  }
  if (is_weekend(day)) return cfg.weekend_multiplier;
  return 1.0;
}

SessionDraw sample_session(const UserProfile& profile, double multiplier, Rng& rng) {
  SessionDraw d;
  d.multiplier = multiplier;
  d.scrolling_s = rng.gamma(profile.gamma_shape, profile.gamma_scale);
  d.watch_s = rng.uniform(profile.watch_min_s, profile.watch_max_s) * multiplier;
  return d;
}

SessionDraw sample_session(const UserProfile& profile, int day, Rng& rng,
                           const PopulationConfig& cfg) {
  const double m = temporal_multiplier(day, profile, rng, cfg);
  return sample_session(profile, m, rng);
}

double adjusted_watch_time(std::int64_t watched, std::span<const double> gammas,
                           double mean_video_s) {
  double total = mean_video_s * static_cast<double>(watched);
  for (double g : gammas) total += g * mean_video_s;
  return total;
}

namespace {

SkipResult skip_counts(double watch_s, double mean_video_s) {
  if (watch_s < 0.0) throw Error("watch time must be >= 0");
  SkipResult r;
  r.encountered = static_cast<std::int64_t>(std::floor(watch_s / mean_video_s));
  r.skipped = static_cast<std::int64_t>(std::floor(0.4 * static_cast<double>(r.encountered)));
  r.watched = r.encountered - r.skipped;
  return r;
}

}  // namespace

SkipResult apply_skipping(double watch_s, Rng& rng, double mean_video_s) {
  SkipResult r = skip_counts(watch_s, mean_video_s);
  r.partial_fractions.reserve(static_cast<std::size_t>(r.skipped));
  for (std::int64_t i = 0; i < r.skipped; ++i) r.partial_fractions.push_back(rng.uniform(0.2, 0.7));
  r.adjusted_watch_s = adjusted_watch_time(r.watched, r.partial_fractions, mean_video_s);
  return r;
}

SkipResult apply_skipping(double watch_s, std::span<const double> gammas, double mean_video_s) {
  SkipResult r = skip_counts(watch_s, mean_video_s);
  if (static_cast<std::int64_t>(gammas.size()) < r.skipped) {
    throw Error("not enough partial fractions for the skipped videos");
  }
  r.partial_fractions.assign(gammas.begin(), gammas.begin() + r.skipped);
  r.adjusted_watch_s = adjusted_watch_time(r.watched, r.partial_fractions, mean_video_s);
  return r;
}

double update_churn_signal(double prev_delta_e, double engagement, double tau) {
  const double diff = engagement - tau;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return 0.8 * prev_delta_e + 0.2 * sign;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double churn_probability(double propensity, double delta_e, double sensitivity, double bias) {
  return sigmoid(bias + propensity + sensitivity * delta_e);
}

ChurnState churn_step(double propensity, double delta_e, bool was_churned,
                      const ChurnParams& params, Rng& rng) {
  ChurnState s;
  s.delta_e = delta_e;
  s.probability = churn_probability(propensity, delta_e, params.sensitivity, params.bias);
  if (was_churned) {
    s.churned = !rng.bernoulli(params.reengage_probability);
  } else {
    s.churned = rng.bernoulli(s.probability);
  }
  return s;
}

std::array<double, kCategoryCount> sample_preferences(const UserProfile& profile, Rng& rng) {
  const auto draw = rng.dirichlet(profile.dirichlet_alpha);
  std::array<double, kCategoryCount> c{};
  std::copy(draw.begin(), draw.end(), c.begin());
  return c;
}

std::array<double, kCategoryCount> category_engagement(double watch_s,
                                                       const std::array<double, kCategoryCount>& c) {
  std::array<double, kCategoryCount> e{};
  for (std::size_t i = 0; i < kCategoryCount; ++i) e[i] = watch_s * c[i];
  return e;
}

Interactions sample_interactions(const UserProfile& profile, const InteractionContext& ctx,
                                 Rng& rng, const PopulationConfig& cfg) {
  Interactions out;
  out.logins = rng.poisson(profile.login_rate);
  const double post_mean = profile.post_mean * (ctx.posted_yesterday ? 1.0 + cfg.post_burst : 1.0);
  out.posts = rng.negative_binomial(cfg.post_dispersion, post_mean);
  double shift = 0.0;
  for (std::size_t q = 0; q < 4; ++q) shift += cfg.coupling.likes[q] * ctx.quadrants[q];
  const double raw = rng.lognormal(profile.likes_log_mean + shift, profile.likes_log_sd) *
                     std::pow(std::max(0.0, ctx.activity_scale), cfg.likes_watch_elasticity);
  out.likes = static_cast<std::int64_t>(std::llround(raw));
  out.comments = rng.binomial(out.likes, cfg.comment_probability);
  out.shares = rng.binomial(out.likes, cfg.share_probability);
  return out;
}

}  // namespace esmr
