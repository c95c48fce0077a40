#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "esmr/rng.hpp"
#include "esmr/types.hpp"

namespace esmr {

struct TierParams {
  double gamma_shape = 2.0;   // k_p
  double gamma_scale = 8.0;   // theta_p
  double watch_min_s = 120.0; // a_p
  double watch_max_s = 600.0; // b_p
  double login_rate = 2.0;
  double churn_propensity_min = 0.5;
  double churn_propensity_max = 1.0;
  double dirichlet_favored = 2.0;
  double dirichlet_other = 2.0;
  double likes_log_mean = -0.8;
  double likes_log_sd = 0.6;
  double post_mean = 0.2;
};

/// Latent affect dynamics. Content watched during a day moves the user's
/// valence, arousal and resilience; those in turn shape the next behavior.
struct MoodDynamics {
  double valence_persistence = 0.6;
  double exposure_gain = 2.0;
  double valence_noise = 0.35;
  double baseline_mean = 0.0;
  double baseline_sd = 0.15;
  double initial_valence_sd = 0.3;
  double arousal_persistence = 0.5;
  double arousal_noise = 0.1;
  double arousal_rest = 0.4;
  // Shift of the valence target per unit of the smoothed engagement signal.
  double momentum_gain = 0.3;
  double resilience_gain = 0.9;
  double resilience_erosion = 0.15;
  // Negative exposure is scaled by (1 - resilience_damping * resilience).
  double resilience_damping = 1.0;
  // Valence noise is scaled by (1 - noise_damping * resilience).
  double noise_damping = 0.7;
  double initial_resilience_min = 0.3;
  double initial_resilience_max = 0.7;
  // Arousal is mapped onto a [0,1] "high arousal" share by a linear ramp.
  double arousal_low = 0.35;
  double arousal_high = 0.65;
};

/// How the four affect quadrants (excited, happy, stressed, disappointed)
/// shift observable behavior.
struct MoodCoupling {
  std::array<double, 4> watch = {0.5, 2.0, -1.0, -2.0};
  std::array<double, 4> scroll = {0.3, -0.3, 1.5, -0.5};
  std::array<double, 4> likes = {1.0, 0.0, -0.3, -0.5};
};

struct PopulationConfig {
  int size = 1000;
  int horizon_days = 30;
  std::array<double, kTierCount> tier_probs = {0.5, 0.35, 0.15};
  std::array<TierParams, kTierCount> tiers = {
      TierParams{2.0, 8.0, 120.0, 600.0, 2.0, 0.5, 1.0, 2.0, 2.0, -0.8, 0.6, 0.2},
      TierParams{3.0, 12.0, 300.0, 1500.0, 5.0, 0.2, 0.6, 6.0, 1.0, -0.1, 0.6, 0.5},
      TierParams{4.0, 18.0, 900.0, 3600.0, 9.0, 0.0, 0.3, 4.0, 1.5, 0.4, 0.6, 1.0}};
  int spike_days_per_user = 2;
  double spike_min = 1.2;
  double spike_max = 1.8;
  double weekend_multiplier = 1.2;
  double churn_sensitivity = -1.5;
  double churn_bias = -5.0;
  double reengage_probability = 0.1;
  double post_dispersion = 0.7;
  double post_burst = 1.0;
  // Likes scale with (watched time / expected watch time) to this power.
  double likes_watch_elasticity = 1.0;
  double comment_probability = 0.15;
  double share_probability = 0.07;
  double activity_window_minutes = 120.0;
  MoodDynamics mood;
  MoodCoupling coupling;
};

struct UserProfile {
  int id = 0;
  Tier tier = Tier::kCasual;
  double gamma_shape = 2.0;
  double gamma_scale = 8.0;
  double watch_min_s = 120.0;
  double watch_max_s = 600.0;
  double churn_propensity = 0.5;
  std::array<double, kCategoryCount> dirichlet_alpha = {2.0, 2.0, 2.0, 2.0};
  int favorite_category = 0;
  std::vector<int> spike_days;
  double login_rate = 2.0;
  double likes_log_mean = -0.8;
  double likes_log_sd = 0.6;
  double post_mean = 0.2;
  double baseline_valence = 0.0;
  double initial_valence = 0.0;
  double initial_resilience = 0.5;
  std::array<double, 2> activity_windows = {480.0, 1200.0};  // minutes since midnight

  double expected_scroll_s() const { return gamma_shape * gamma_scale; }
  double expected_watch_s() const { return 0.5 * (watch_min_s + watch_max_s); }
  double expected_likes() const;
};

struct SessionDraw {
  double scrolling_s = 0.0;  // S
  double watch_s = 0.0;      // V
  double multiplier = 1.0;   // M
};

struct Interactions {
  std::int64_t logins = 0;
  std::int64_t posts = 0;
  std::int64_t likes = 0;
  std::int64_t comments = 0;
  std::int64_t shares = 0;
};

/// One user-day of behavioral draws.
struct DayDraw {
  SessionDraw session;
  Interactions interactions;
};

struct SkipResult {
  double adjusted_watch_s = 0.0;
  std::int64_t encountered = 0;
  std::int64_t watched = 0;
  std::int64_t skipped = 0;
  std::vector<double> partial_fractions;  // gamma_i per skipped video
};

struct ChurnState {
  double delta_e = 0.0;
  bool churned = false;
  double probability = 0.5;
};

struct ChurnParams {
  double sensitivity = 1.5;
  double bias = 0.0;
  double reengage_probability = 0.1;
};

/// Latent affect of one user.
struct AffectState {
  double valence = 0.0;     // [-1, 1]
  double arousal = 0.4;     // [0, 1]
  double resilience = 0.5;  // [0, 1]
};

/// Intensity-weighted summary of the content a user consumed in one day.
struct Exposure {
  double weight = 0.0;            // sum of watch weights (1 per full watch, gamma per skip)
  double positive = 0.0;          // sum w * intensity/10 over positive-valence videos
  double negative = 0.0;          // same over negative-valence videos
  double intensity = 0.0;         // sum w * intensity/10
  double calm_positive = 0.0;     // sum w over happy/calm videos
  double negative_arousing = 0.0; // sum w over anxious/stressed/angry videos

  void add(VideoEmotion emotion, int intensity, double w);
};

/// Quadrant weights in [0,1]: excited, happy, stressed, disappointed.
std::array<double, 4> mood_quadrants(const AffectState& s, const MoodDynamics& cfg);

AffectState initial_affect(const UserProfile& p);
AffectState affect_step(const AffectState& s, const Exposure& exposure, double baseline,
                        const MoodDynamics& cfg, Rng& rng);

std::vector<UserProfile> generate_users(int n, std::uint64_t seed,
                                        const PopulationConfig& cfg = {});

/// Day 1 is a Monday; days 6 and 7 (mod 7) are the weekend.
bool is_weekend(int day);

/// Spike days take precedence over weekends. Throws if day is outside
/// [1, horizon_days].
double temporal_multiplier(int day, const UserProfile& profile, Rng& rng,
                           const PopulationConfig& cfg = {});

/// S ~ Gamma(k_p, theta_p), V ~ Uniform(a_p, b_p) * multiplier.
SessionDraw sample_session(const UserProfile& profile, double multiplier, Rng& rng);
SessionDraw sample_session(const UserProfile& profile, int day, Rng& rng,
                           const PopulationConfig& cfg = {});

/// v_bar * n_w + sum_i gamma_i * v_bar
double adjusted_watch_time(std::int64_t watched, std::span<const double> gammas,
                           double mean_video_s = 45.0);
SkipResult apply_skipping(double watch_s, Rng& rng, double mean_video_s = 45.0);
/// Deterministic variant with the partial fractions supplied by the caller.
SkipResult apply_skipping(double watch_s, std::span<const double> gammas,
                          double mean_video_s = 45.0);

/// 0.8 * prev + 0.2 * sign(E - tau)
double update_churn_signal(double prev_delta_e, double engagement, double tau);

double sigmoid(double x);
double churn_probability(double propensity, double delta_e, double sensitivity,
                         double bias = 0.0);
/// Churn draw for one day. A user already churned re-engages with
/// `reengage_probability`; an active user churns with the sigmoid probability.
ChurnState churn_step(double propensity, double delta_e, bool was_churned,
                      const ChurnParams& params, Rng& rng);

std::array<double, kCategoryCount> sample_preferences(const UserProfile& profile, Rng& rng);
/// E_vec = V * c
std::array<double, kCategoryCount> category_engagement(double watch_s,
                                                       const std::array<double, kCategoryCount>& c);

struct InteractionContext {
  double activity_scale = 1.0;  // watched time relative to the profile's expectation
  bool posted_yesterday = false;
  std::array<double, 4> quadrants = {0.0, 0.0, 0.0, 0.0};
};

Interactions sample_interactions(const UserProfile& profile, const InteractionContext& ctx,
                                 Rng& rng, const PopulationConfig& cfg = {});

}  // namespace esmr
