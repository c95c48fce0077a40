#include "esmr/journal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "esmr/parallel.hpp"

namespace esmr {

const std::array<std::string_view, kContinuousFeatureCount> kContinuousFeatureNames = {
    "scroll_s",          "watch_s",           "watch_budget_s",     "scroll_watch_ratio",
    "engagement",        "delta_e",           "logins",             "posts",
    "likes",             "comments",          "shares",             "n_watched",
    "n_skipped",         "skip_rate",         "time_educational",   "time_entertainment",
    "time_news",         "time_inspirational", "mean_intensity",    "mean_video_valence",
    "mean_video_score",  "high_arousal_share", "watch_rel",         "scroll_rel",
    "likes_rel",         "shares_rel",        "delta_e_change",     "engagement_trend",
    "intensity_change",  "churned",           "prior_stressed_days", "prior_negative_days"};

const std::array<std::string_view, kCategoricalFeatureCount> kCategoricalFeatureNames = {
    "tier", "dominant_category", "prior_emotion", "day_of_week"};

std::size_t continuous_index(std::string_view name) {
  auto it = std::find(kContinuousFeatureNames.begin(), kContinuousFeatureNames.end(), name);
  if (it == kContinuousFeatureNames.end()) {
    throw Error("unknown feature column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - kContinuousFeatureNames.begin());
}

UserSimState::UserSimState(const UserProfile& p, std::size_t catalog_size, Rng stream)
    : profile(&p), affect(initial_affect(p)), last_seen_day(catalog_size, 0), rng(stream) {}

bool UserSimState::seen_recently(int video_id, int day, int window) const {
  const int seen = last_seen_day[static_cast<std::size_t>(video_id)];
  return seen > 0 && day - seen <= window;
}

std::vector<int> select_candidates_70_30(const std::vector<const VideoItem*>& pool, std::size_t m,
                                         Rng& rng, double top_fraction) {
  if (m > pool.size()) {
    throw Error("requested " + std::to_string(m) + " candidates from a pool of " +
                std::to_string(pool.size()));
  }
  if (m == 0) return {};
  std::vector<const VideoItem*> ranked = pool;
  std::sort(ranked.begin(), ranked.end(), [](const VideoItem* a, const VideoItem* b) {
    if (a->engagement_score != b->engagement_score) return a->engagement_score > b->engagement_score;
    return a->id < b->id;
  });
  const auto top = std::min<std::size_t>(
      m, static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(m) - 1e-12)));
  std::vector<int> out;
  out.reserve(m);
  for (std::size_t i = 0; i < top; ++i) out.push_back(ranked[i]->id);
  const std::size_t rest = ranked.size() - top;
  for (std::size_t j : rng.sample_indices(rest, m - top)) out.push_back(ranked[top + j]->id);
  return out;
}

double composite_engagement(const EngagementInputs& in, const EngagementWeights& w) {
  const auto& x = in.interactions;
  return w.watch * in.watch_s / w.watch_norm_s + w.scroll * in.scroll_s / w.scroll_norm_s +
         w.logins * static_cast<double>(x.logins) + w.posts * static_cast<double>(x.posts) +
         w.likes * static_cast<double>(x.likes) + w.comments * static_cast<double>(x.comments) +
         w.shares * static_cast<double>(x.shares);
}

double composite_engagement(const DailyRecord& r, const EngagementWeights& w) {
  return composite_engagement(EngagementInputs{r.watch_s, r.scroll_s, r.interactions}, w);
}

double skip_probability(double score, double max_score, const JournalConfig& cfg) {
  const double normalized = max_score > 0.0 ? score / max_score : 0.0;
  return std::clamp(1.0 - normalized, cfg.skip_min, cfg.skip_max);
}

DaySimulator::DaySimulator(const Catalog& catalog, const PopulationConfig& population,
                           const JournalConfig& journal, double tau)
    : catalog_(catalog), population_(population), journal_(journal), tau_(tau) {
  if (catalog.empty()) throw Error("empty catalog");
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i].id != static_cast<int>(i)) throw Error("catalog ids must equal their position");
    by_category_[index_of(catalog[i].category)].push_back(catalog[i].id);
  }
  for (auto& ids : by_category_) {
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      return catalog_[static_cast<std::size_t>(a)].engagement_score >
             catalog_[static_cast<std::size_t>(b)].engagement_score;
    });
  }
}

Feed DaySimulator::organic_feed(const FeedRequest& req) const {
  Feed feed;
  for (std::size_t k = 0; k < kCategoryCount; ++k) {
    const double share = req.preferences[k] * req.budget_s / journal_.mean_video_s;
    const auto wanted = static_cast<std::size_t>(std::llround(share));
    std::vector<const VideoItem*> pool;
    for (int id : by_category_[k]) {
      if (!req.state.seen_recently(id, req.day, journal_.recency_days)) {
        pool.push_back(&catalog_[static_cast<std::size_t>(id)]);
      }
    }
    const std::size_t m = std::min(wanted, pool.size());
    feed.groups.push_back(select_candidates_70_30(pool, m, req.rng, journal_.top_fraction));
  }
  return feed;
}

DailyRecord DaySimulator::step_organic(UserSimState& state, int day, bool allow_churn) const {
  return step(
      state, day, [this](const FeedRequest& r) { return organic_feed(r); }, allow_churn);
}

DailyRecord DaySimulator::step(UserSimState& state, int day, const FeedProvider& feed_provider,
                               bool allow_churn) const {
  const UserProfile& profile = *state.profile;
  Rng& rng = state.rng;
  const MoodDynamics& mood = population_.mood;
  DailyRecord rec;
  rec.user_id = profile.id;
  rec.day = day;
  if (day < 1 || day > population_.horizon_days) {
    throw Error("day " + std::to_string(day) + " outside [1, " +
                std::to_string(population_.horizon_days) + "]");
  }

  if (allow_churn) {
    const ChurnParams params{population_.churn_sensitivity, population_.churn_bias,
                             population_.reengage_probability};
    const ChurnState cs =
        churn_step(profile.churn_propensity, state.delta_e, state.churned, params, rng);
    state.churned = cs.churned;
  }
  // The day's mood responds to yesterday's content and engagement momentum.
  const double baseline = profile.baseline_valence + mood.momentum_gain * state.delta_e;
  state.affect = affect_step(state.affect, state.pending, baseline, mood, rng);
  state.pending = Exposure{};
  rec.latent = state.affect;
  if (state.churned) {
    rec.churned = true;
    state.posted_yesterday = false;
    return rec;
  }

  const double multiplier = temporal_multiplier(day, profile, rng, population_);
  const SessionDraw session = sample_session(profile, multiplier, rng);
  const auto quadrants = mood_quadrants(state.affect, mood);
  double watch_shift = 0.0;
  double scroll_shift = 0.0;
  for (std::size_t q = 0; q < 4; ++q) {
    watch_shift += population_.coupling.watch[q] * quadrants[q];
    scroll_shift += population_.coupling.scroll[q] * quadrants[q];
  }
  const double budget = session.watch_s * std::exp(watch_shift);
  const auto preferences = sample_preferences(profile, rng);

  const Feed feed = feed_provider(FeedRequest{state, day, budget, preferences, rng});

  Exposure exposure;
  double used = 0.0;
  double score_sum = 0.0;
  double valence_sum = 0.0;
  double high_arousal = 0.0;
  bool exhausted = false;
  const double v_bar = journal_.mean_video_s;
  for (const auto& group : feed.groups) {
    if (exhausted) break;
    double max_score = 0.0;
    for (int id : group) {
      const double score = catalog_.at(static_cast<std::size_t>(id)).engagement_score;
      if (score > max_score) max_score = score;
    }
    for (int id : group) {
      const VideoItem& v = catalog_.at(static_cast<std::size_t>(id));
      const bool skip = rng.bernoulli(skip_probability(v.engagement_score, max_score, journal_));
      double cost = v_bar;
      double weight = 1.0;
      if (skip) {
        weight = rng.uniform(journal_.partial_min, journal_.partial_max);
        cost = weight * v_bar;
        rec.skipped.push_back(id);
      } else {
        const std::size_t w = rng.bernoulli(0.5) ? 0 : 1;
        const double minute = profile.activity_windows[w] +
                              rng.uniform(0.0, population_.activity_window_minutes);
        rec.assigned.push_back(Assignment{id, static_cast<int>(minute) % 1440});
      }
      exposure.add(v.emotion, v.intensity, weight);
      rec.category_time[index_of(v.category)] += cost;
      used += cost;
      score_sum += weight * v.engagement_score;
      valence_sum += weight * valence_sign(v.emotion) * v.intensity / 10.0;
      if (is_high_arousal(v.emotion)) high_arousal += weight;
      state.last_seen_day[static_cast<std::size_t>(id)] = day;
      if (used > budget) {
        exhausted = true;
        break;
      }
    }
  }
  std::sort(rec.assigned.begin(), rec.assigned.end(), [](const Assignment& a, const Assignment& b) {
    return a.minute != b.minute ? a.minute < b.minute : a.video_id < b.video_id;
  });

  rec.multiplier = multiplier;
  rec.watch_budget_s = budget;
  rec.watch_s = used;
  rec.scroll_s = session.scrolling_s * std::exp(scroll_shift);
  InteractionContext ictx;
  ictx.activity_scale = used / profile.expected_watch_s();
  ictx.posted_yesterday = state.posted_yesterday;
  ictx.quadrants = quadrants;
  rec.interactions = sample_interactions(profile, ictx, rng, population_);
  rec.engagement = composite_engagement(rec, journal_.weights);
  rec.delta_e = update_churn_signal(state.delta_e, rec.engagement, tau_);
  rec.scroll_watch_ratio = rec.scroll_s / std::max(rec.watch_s, 1.0);
  if (exposure.weight > 0.0) {
    rec.mean_intensity = exposure.intensity / exposure.weight;
    rec.mean_video_valence = valence_sum / exposure.weight;
    rec.mean_video_score = score_sum / exposure.weight;
    rec.high_arousal_share = high_arousal / exposure.weight;
  }

  state.pending = exposure;
  state.delta_e = rec.delta_e;
  state.posted_yesterday = rec.interactions.posts > 0;
  return rec;
}

FeatureRow make_feature_row(const DailyRecord& r, const DailyRecord* prev,
                            const UserProfile& profile) {
  FeatureRow row;
  row.user_id = r.user_id;
  row.day = r.day;
  auto& x = row.continuous;
  row.categorical = {static_cast<int>(index_of(profile.tier)), 4, 6, (r.day - 1) % 7};
  if (r.churned) {
    x[continuous_index("churned")] = 1.0;
    return row;
  }
  const auto& in = r.interactions;
  const double n_watched = static_cast<double>(r.assigned.size());
  const double n_skipped = static_cast<double>(r.skipped.size());
  x[0] = r.scroll_s;
  x[1] = r.watch_s;
  x[2] = r.watch_budget_s;
  x[3] = r.scroll_watch_ratio;
  x[4] = r.engagement;
  x[5] = r.delta_e;
  x[6] = static_cast<double>(in.logins);
  x[7] = static_cast<double>(in.posts);
  x[8] = static_cast<double>(in.likes);
  x[9] = static_cast<double>(in.comments);
  x[10] = static_cast<double>(in.shares);
  x[11] = n_watched;
  x[12] = n_skipped;
  x[13] = n_watched + n_skipped > 0 ? n_skipped / (n_watched + n_skipped) : 0.0;
  for (std::size_t k = 0; k < kCategoryCount; ++k) x[14 + k] = r.category_time[k];
  x[18] = r.mean_intensity;
  x[19] = r.mean_video_valence;
  x[20] = r.mean_video_score;
  x[21] = r.high_arousal_share;
  x[22] = std::log1p(r.watch_s / profile.expected_watch_s());
  x[23] = std::log1p(r.scroll_s / profile.expected_scroll_s());
  x[24] = std::log1p(static_cast<double>(in.likes) / profile.expected_likes());
  x[25] = std::log1p(static_cast<double>(in.shares) / profile.expected_likes());
  // Trend columns are zero after a churned day.
  if (prev != nullptr && prev->active()) {
    x[26] = r.delta_e - prev->delta_e;
    x[27] = r.engagement - prev->engagement;
    x[28] = r.mean_intensity - prev->mean_intensity;
  }

  const auto dominant = std::max_element(r.category_time.begin(), r.category_time.end());
  row.categorical[1] = *dominant > 0.0 ? static_cast<int>(dominant - r.category_time.begin()) : 4;
  return row;
}

void fill_label_features(FeatureRow& row, std::span<const UserEmotion> history) {
  row.categorical[2] = history.empty() ? 6 : static_cast<int>(index_of(history.back()));
  if (row.continuous[29] > 0.5) {
    // Churned rows keep zero continuous features.
    row.continuous[kLabelDerivedBegin] = 0.0;
    row.continuous[kLabelDerivedBegin + 1] = 0.0;
    return;
  }
  const std::size_t window = std::min<std::size_t>(3, history.size());
  double stressed = 0.0;
  double negative = 0.0;
  for (std::size_t i = history.size() - window; i < history.size(); ++i) {
    if (history[i] == UserEmotion::kStressed) stressed += 1.0;
    if (is_negative(history[i])) negative += 1.0;
  }
  row.continuous[kLabelDerivedBegin] = stressed;
  row.continuous[kLabelDerivedBegin + 1] = negative;
}

namespace {

std::vector<double> engagement_samples(const UserProfile& user, const DaySimulator& sim, int days,
                                       std::uint64_t seed, std::size_t catalog_size) {
  UserSimState state(user, catalog_size,
                     Rng::stream(seed, "journal-warmup", static_cast<std::uint64_t>(user.id)));
  std::vector<double> out;
  for (int d = 1; d <= days; ++d) out.push_back(sim.step_organic(state, d, false).engagement);
  return out;
}

}  // namespace

double estimate_tau(const std::vector<UserProfile>& users, const Catalog& catalog,
                    const PopulationConfig& population, const JournalConfig& journal,
                    std::uint64_t seed, int threads) {
  if (users.empty()) throw Error("cannot estimate tau without users");
  const DaySimulator sim(catalog, population, journal, 0.0);
  const int days = std::clamp(journal.warmup_days, 1, population.horizon_days);
  std::vector<std::vector<double>> per_user(users.size());
  parallel_for(users.size(), threads, [&](std::size_t i) {
    per_user[i] = engagement_samples(users[i], sim, days, seed, catalog.size());
  });
  std::vector<double> all;
  for (const auto& v : per_user) all.insert(all.end(), v.begin(), v.end());
  const std::size_t mid = all.size() / 2;
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid), all.end());
  double median = all[mid];
  if (all.size() % 2 == 0) {
    const double lower = *std::max_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median;
}

Dataset build_dataset(const std::vector<UserProfile>& users, const Catalog& catalog, int days,
                      std::uint64_t seed, const PopulationConfig& population,
                      const JournalConfig& journal, int threads) {
  if (catalog.empty()) throw Error("empty catalog");
  if (days < 1 || days > population.horizon_days) {
    throw Error("dataset days must lie in [1, " + std::to_string(population.horizon_days) + "]");
  }
  Dataset ds;
  ds.days = days;
  ds.tau = journal.tau >= 0.0
               ? journal.tau
               : estimate_tau(users, catalog, population, journal, seed, threads);
  const DaySimulator sim(catalog, population, journal, ds.tau);
  const auto per_user = static_cast<std::size_t>(days);
  ds.records.resize(users.size() * per_user);
  ds.features.resize(users.size() * per_user);
  parallel_for(users.size(), threads, [&](std::size_t u) {
    const UserProfile& user = users[u];
    UserSimState state(user, catalog.size(),
                       Rng::stream(seed, "journal", static_cast<std::uint64_t>(user.id)));
    for (int d = 1; d <= days; ++d) {
      const std::size_t slot = u * per_user + static_cast<std::size_t>(d - 1);
      ds.records[slot] = sim.step_organic(state, d);
      const DailyRecord* prev = d > 1 ? &ds.records[slot - 1] : nullptr;
      ds.features[slot] = make_feature_row(ds.records[slot], prev, user);
    }
  });
  return ds;
}

}  // namespace esmr
