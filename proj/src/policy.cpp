#include "esmr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "esmr/parallel.hpp"

namespace esmr {

using json = nlohmann::json;

const std::array<std::string_view, kScorerFeatureCount> kScorerFeatureNames = {
    "engagement_score", "intensity",    "duration_s", "virality",      "category",      "video_emotion",
    "valence_sign",     "high_arousal", "tier",       "prior_emotion", "favorite_match"};

int ScorerContext::key() const {
  return (static_cast<int>(index_of(tier)) * 7 + prior_emotion) * 4 + favorite_category;
}

std::array<double, kScorerFeatureCount> scorer_features(const VideoItem& v, const ScorerContext& ctx) {
  const int cat = static_cast<int>(index_of(v.category));
  return {v.engagement_score,
          static_cast<double>(v.intensity),
          v.duration_s,
          v.virality,
          static_cast<double>(cat),
          static_cast<double>(index_of(v.emotion)),
          static_cast<double>(valence_sign(v.emotion)),
          is_high_arousal(v.emotion) ? 1.0 : 0.0,
          static_cast<double>(index_of(ctx.tier)),
          static_cast<double>(ctx.prior_emotion),
          cat == ctx.favorite_category ? 1.0 : 0.0};
}

double EngagementScorer::predict(const VideoItem& v, const ScorerContext& ctx) const {
  const auto x = scorer_features(v, ctx);
  return model.predict_proba(x);
}

std::string EngagementScorer::to_json() const {
  json j = json::parse(model.to_json());
  j["validation_auc"] = validation_auc;
  j["rounds"] = rounds;
  j["train_rows"] = train_rows;
  j["valid_rows"] = valid_rows;
  return j.dump() + "\n";
}

EngagementScorer EngagementScorer::from_json(const std::string& text) {
  EngagementScorer s;
  s.model = Gbdt::from_json(text);
  const json j = json::parse(text);
  s.validation_auc = j.value("validation_auc", 0.0);
  s.rounds = j.value("rounds", static_cast<int>(s.model.trees.size()));
  s.train_rows = j.value("train_rows", std::size_t{0});
  s.valid_rows = j.value("valid_rows", std::size_t{0});
  if (s.model.feature_names.size() != kScorerFeatureCount) {
    throw Error("scorer json: expected " + std::to_string(kScorerFeatureCount) + " features");
  }
  return s;
}

ScorerDataset build_scorer_dataset(const Dataset& ds, std::span<const UserEmotion> labels,
                                   const std::vector<UserProfile>& users, const Catalog& catalog) {
  if (labels.size() != ds.records.size()) throw Error("scorer data: labels not aligned with records");
  ScorerDataset out;
  out.X.cols = kScorerFeatureCount;
  auto add = [&](const VideoItem& v, const ScorerContext& ctx, int y, int user) {
    const auto x = scorer_features(v, ctx);
    out.X.data.insert(out.X.data.end(), x.begin(), x.end());
    out.y.push_back(y);
    out.user_ids.push_back(user);
  };
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const DailyRecord& r = ds.records[i];
    if (r.churned) continue;
    if (r.user_id < 0 || static_cast<std::size_t>(r.user_id) >= users.size()) {
      throw Error("scorer data: unknown user " + std::to_string(r.user_id));
    }
    const UserProfile& u = users[static_cast<std::size_t>(r.user_id)];
    const bool has_prior = i > 0 && ds.records[i - 1].user_id == r.user_id;
    const ScorerContext ctx{u.tier, has_prior ? static_cast<int>(index_of(labels[i - 1])) : 6,
                            u.favorite_category};
    for (const Assignment& a : r.assigned) add(catalog.at(static_cast<std::size_t>(a.video_id)), ctx, 1, r.user_id);
    for (int id : r.skipped) add(catalog.at(static_cast<std::size_t>(id)), ctx, 0, r.user_id);
  }
  out.X.rows = out.y.size();
  return out;
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out;
  out.cols = m.cols;
  out.rows = rows.size();
  out.data.reserve(rows.size() * m.cols);
  for (std::size_t r : rows) {
    const auto row = m.row(r);
    out.data.insert(out.data.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace

EngagementScorer train_scorer(const ScorerDataset& data, const ScorerConfig& cfg, std::uint64_t seed) {
  if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
    throw ConfigError("policy.scorer.validation_fraction must lie in (0, 1)");
  }
  if (data.X.rows == 0) throw Error("scorer data is empty");
  std::vector<std::size_t> rows(data.X.rows);
  std::iota(rows.begin(), rows.end(), 0);
  if (cfg.max_rows > 0 && rows.size() > cfg.max_rows) {
    Rng rng = Rng::stream(seed, "scorer-rows");
    rows = rng.sample_indices(data.X.rows, cfg.max_rows);
    std::sort(rows.begin(), rows.end());
  }

  std::vector<int> ids(data.user_ids);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  Rng split = Rng::stream(seed, "scorer-split");
  split.shuffle(ids);
  const auto n_valid = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(ids.size()))));
  if (ids.size() < 2) throw Error("scorer data needs at least two users");
  std::vector<char> valid_user(static_cast<std::size_t>(*std::max_element(ids.begin(), ids.end())) + 1, 0);
  for (std::size_t i = 0; i < std::min(n_valid, ids.size() - 1); ++i) {
    valid_user[static_cast<std::size_t>(ids[i])] = 1;
  }

  std::vector<std::size_t> train_rows, valid_rows;
  for (std::size_t r : rows) {
    (valid_user[static_cast<std::size_t>(data.user_ids[r])] ? valid_rows : train_rows).push_back(r);
  }
  std::vector<int> y_train, y_valid;
  for (std::size_t r : train_rows) y_train.push_back(data.y[r]);
  for (std::size_t r : valid_rows) y_valid.push_back(data.y[r]);
  const auto positives = std::count(y_valid.begin(), y_valid.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y_valid.size())) {
    throw Error("scorer validation split holds a single class");
  }

  const std::vector<std::string> names(kScorerFeatureNames.begin(), kScorerFeatureNames.end());
  GbdtReport rep = train_gbdt(take_rows(data.X, train_rows), y_train, take_rows(data.X, valid_rows),
                              y_valid, names, cfg.gbdt);
  EngagementScorer s;
  s.model = std::move(rep.model);
  s.validation_auc = rep.validation_auc;
  s.rounds = rep.rounds;
  s.train_rows = train_rows.size();
  s.valid_rows = valid_rows.size();
  return s;
}

std::vector<int> rank_candidates(const EngagementScorer& scorer, const ScorerContext& ctx,
                                 std::span<const VideoItem> candidates) {
  if (candidates.empty()) throw Error("rank_candidates: no candidates");
  std::vector<std::pair<double, int>> scored;
  scored.reserve(candidates.size());
  for (const VideoItem& v : candidates) scored.emplace_back(scorer.predict(v, ctx), v.id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<int> out;
  out.reserve(scored.size());
  for (const auto& [p, id] : scored) out.push_back(id);
  return out;
}

RankingCache::RankingCache(const EngagementScorer& scorer, const Catalog& catalog, int threads)
    : rankings_(ScorerContext::kCount) {
  parallel_for(rankings_.size(), threads, [&](std::size_t k) {
    const int key = static_cast<int>(k);
    ScorerContext ctx;
    ctx.favorite_category = key % 4;
    ctx.prior_emotion = (key / 4) % 7;
    ctx.tier = static_cast<Tier>(key / 28);
    rankings_[k] = rank_candidates(scorer, ctx, catalog);
  });
}

const std::vector<int>& RankingCache::ranking(const ScorerContext& ctx) const {
  const int key = ctx.key();
  if (key < 0 || key >= ScorerContext::kCount) throw Error("scorer context out of range");
  return rankings_[static_cast<std::size_t>(key)];
}

EngagementTertiles engagement_tertiles(const Dataset& ds) {
  std::vector<double> e;
  for (const auto& r : ds.records) {
    if (!r.churned) e.push_back(r.engagement);
  }
  if (e.empty()) throw Error("no active days to derive engagement tertiles from");
  std::sort(e.begin(), e.end());
  return {e[e.size() / 3], e[2 * e.size() / 3]};
}

int PolicyState::index() const {
  return ((static_cast<int>(index_of(emotion)) * kStreakBuckets + streak_bucket) * kTertiles +
          engagement_tertile) *
             kLastCategories +
         last_category;
}

PolicyState PolicyState::from_index(int index) {
  if (index < 0 || index >= kStateCount) throw Error("state index out of range");
  PolicyState s;
  s.last_category = index % kLastCategories;
  index /= kLastCategories;
  s.engagement_tertile = index % kTertiles;
  index /= kTertiles;
  s.streak_bucket = index % kStreakBuckets;
  s.emotion = static_cast<UserEmotion>(index / kStreakBuckets);
  return s;
}

int trailing_negative_days(std::span<const UserEmotion> labels) {
  int n = 0;
  for (auto it = labels.rbegin(); it != labels.rend() && is_negative(*it); ++it) ++n;
  return n;
}

PolicyState encode_state(std::span<const DayOutcome> history, const EngagementTertiles& tertiles) {
  PolicyState s;
  if (history.empty()) return s;
  const DayOutcome& last = history.back();
  s.emotion = last.churned ? UserEmotion::kChurned : last.label;
  std::vector<UserEmotion> labels;
  labels.reserve(history.size());
  for (const auto& d : history) labels.push_back(d.churned ? UserEmotion::kChurned : d.label);
  const int streak = trailing_negative_days(labels);
  s.streak_bucket = streak == 0 ? 0 : streak < 3 ? 1 : 2;
  if (!last.churned) {
    s.engagement_tertile = last.engagement <= tertiles.low ? 0 : last.engagement <= tertiles.high ? 1 : 2;
    s.last_category = last.dominant_category;
  }
  return s;
}

ActionKey ActionKey::from_index(int index) {
  if (index < 0 || index >= kActions) throw Error("action index out of range");
  return {static_cast<Category>(index / static_cast<int>(kVideoEmotionCount)),
          static_cast<VideoEmotion>(index % static_cast<int>(kVideoEmotionCount))};
}

std::vector<int> resolve_action(ActionKey key, const std::vector<int>& ranking, const Catalog& catalog,
                                const UserSimState& state, int day, std::size_t m, int recency_days) {
  std::vector<int> out;
  if (m == 0) return out;
  std::vector<char> taken(catalog.size(), 0);
  const int sign = valence_sign(key.emotion);
  const bool arousing = is_high_arousal(key.emotion);
  for (int tier = 0; tier < 4 && out.size() < m; ++tier) {
    for (int id : ranking) {
      const VideoItem& v = catalog[static_cast<std::size_t>(id)];
      bool match = false;
      switch (tier) {
        case 0: match = v.category == key.category && v.emotion == key.emotion; break;
        case 1: match = v.emotion == key.emotion; break;
        case 2: match = valence_sign(v.emotion) == sign && is_high_arousal(v.emotion) == arousing; break;
        default: match = true;
      }
      if (!match || taken[static_cast<std::size_t>(id)] || state.seen_recently(id, day, recency_days)) {
        continue;
      }
      taken[static_cast<std::size_t>(id)] = 1;
      out.push_back(id);
      if (out.size() == m) break;
    }
  }
  return out;
}

std::vector<int> scorer_slate(const std::vector<int>& ranking, const UserSimState& state, int day,
                              std::size_t m, int recency_days) {
  std::vector<int> out;
  for (int id : ranking) {
    if (out.size() == m) break;
    if (!state.seen_recently(id, day, recency_days)) out.push_back(id);
  }
  return out;
}

std::string_view to_string(PolicyKind p) { return p == PolicyKind::kAgent ? "agent" : "scorer"; }

bool is_vulnerable(std::span<const UserEmotion> trajectory, int min_streak) {
  return trailing_negative_days(trajectory) >= min_streak;
}

PolicyKind select_policy(std::span<const UserEmotion> trajectory, int min_streak) {
  return is_vulnerable(trajectory, min_streak) ? PolicyKind::kAgent : PolicyKind::kScorer;
}

QTable::QTable(int states, int actions) : states_(states), actions_(actions) {
  if (states <= 0 || actions <= 0) throw Error("Q-table needs positive dimensions");
  q_.assign(static_cast<std::size_t>(states) * static_cast<std::size_t>(actions), 0.0);
  visits_.assign(q_.size(), 0);
}

std::size_t QTable::idx(int s, int a) const {
  if (s < 0 || s >= states_ || a < 0 || a >= actions_) throw Error("Q-table index out of range");
  return static_cast<std::size_t>(s) * static_cast<std::size_t>(actions_) + static_cast<std::size_t>(a);
}

double QTable::max_q(int s) const {
  const auto begin = q_.begin() + static_cast<std::ptrdiff_t>(idx(s, 0));
  return *std::max_element(begin, begin + actions_);
}

int QTable::argmax(int s) const {
  const auto begin = q_.begin() + static_cast<std::ptrdiff_t>(idx(s, 0));
  return static_cast<int>(std::max_element(begin, begin + actions_) - begin);
}

double QTable::max_abs() const {
  double m = 0.0;
  for (double v : q_) m = std::max(m, std::abs(v));
  return m;
}

std::string QTable::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "state,action,q,visits\n";
  for (int s = 0; s < states_; ++s) {
    for (int a = 0; a < actions_; ++a) out << s << ',' << a << ',' << q(s, a) << ',' << visits(s, a) << '\n';
  }
  return out.str();
}

QTable QTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "state,action,q,visits") throw Error("q-table csv: bad header");
  std::vector<std::tuple<int, int, double, std::int64_t>> rows;
  int max_s = -1, max_a = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& x : f) {
      if (!std::getline(ls, x, ',')) throw Error("q-table csv: short row '" + line + "'");
    }
    try {
      rows.emplace_back(std::stoi(f[0]), std::stoi(f[1]), std::stod(f[2]), std::stoll(f[3]));
    } catch (const std::exception&) {
      throw Error("q-table csv: unparsable row '" + line + "'");
    }
    max_s = std::max(max_s, std::get<0>(rows.back()));
    max_a = std::max(max_a, std::get<1>(rows.back()));
  }
  if (rows.empty()) throw Error("q-table csv: no rows");
  QTable t(max_s + 1, max_a + 1);
  for (const auto& [s, a, v, n] : rows) {
    if (s < 0 || a < 0) throw Error("q-table csv: negative index");
    t.q(s, a) = v;
    t.visits_[t.idx(s, a)] = n;
  }
  return t;
}

void q_update(QTable& table, int s, int a, double r, int s_next, double lr, double gamma) {
  const double target = r + (s_next >= 0 ? gamma * table.max_q(s_next) : 0.0);
  double& q = table.q(s, a);
  q += lr * (target - q);
  table.visit(s, a);
}

std::vector<double> boltzmann_probabilities(const QTable& table, int s, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("Boltzmann temperature must be positive");
  }
  const double top = table.max_q(s);
  std::vector<double> p(static_cast<std::size_t>(table.actions()));
  double z = 0.0;
  for (int a = 0; a < table.actions(); ++a) {
    p[static_cast<std::size_t>(a)] = std::exp((table.q(s, a) - top) / temperature);
    z += p[static_cast<std::size_t>(a)];
  }
  for (double& v : p) v /= z;
  return p;
}

int boltzmann_select(const QTable& table, int s, double temperature, Rng& rng) {
  const auto p = boltzmann_probabilities(table, s, temperature);
  double u = rng.uniform();
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (u < p[a]) return static_cast<int>(a);
    u -= p[a];
  }
  // Rounding left a sliver: fall back to the most likely action.
  return table.argmax(s);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("policy.replay_capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
    return;
  }
  items_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::contents() const {
  std::vector<Transition> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(head_ + i) % items_.size()]);
  return out;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  std::vector<Transition> out;
  const std::size_t k = std::min(batch, items_.size());
  for (std::size_t i : rng.sample_indices(items_.size(), k)) out.push_back(items_[i]);
  return out;
}

double RewardBreakdown::recompute() const {
  return engagement_weight * r_eng + alpha_emo * r_emo + beta_effective() * r_cause;
}

RewardBreakdown combine_reward(double r_eng, double r_emo, double r_cause, bool vulnerable,
                               const RewardWeights& w) {
  RewardBreakdown b;
  b.r_eng = r_eng;
  b.r_emo = r_emo;
  b.r_cause = r_cause;
  b.engagement_weight = w.engagement;
  b.alpha_emo = w.alpha_emo;
  b.beta = w.beta;
  b.amplification = w.amplification;
  b.vulnerable = vulnerable;
  b.total = b.recompute();
  return b;
}

double engagement_reward(double engagement, double tau) {
  if (!(tau > 0.0)) throw Error("engagement normalizer must be positive");
  return std::tanh(engagement / tau);
}

double causal_bonus(const RewardOutcome& outcome, std::span<const RewardTarget> targets) {
  double total = 0.0;
  for (const RewardTarget& t : targets) {
    double sum = 0.0;
    for (const CausalParent& p : t.parents.parents) {
      const auto it = std::find(kCausalFeatureNames.begin(), kCausalFeatureNames.end(), p.feature);
      if (it == kCausalFeatureNames.end()) {
        throw Error("parent feature '" + p.feature + "' of " + t.parents.target +
                    " is missing from the outcome");
      }
      if (!outcome.previous_features) continue;
      const auto f = static_cast<std::size_t>(it - kCausalFeatureNames.begin());
      const double scale = p.scale > 0.0 ? p.scale : 1.0;
      sum += p.weight * (outcome.features[f] - (*outcome.previous_features)[f]) / scale;
    }
    total += t.sign * sum;
  }
  return targets.empty() ? 0.0 : total / static_cast<double>(targets.size());
}

RewardBreakdown compute_reward(const RewardOutcome& outcome, std::span<const RewardTarget> targets,
                               bool vulnerable, const RewardWeights& weights) {
  const double r_eng = engagement_reward(outcome.engagement, outcome.tau);
  const bool improved = outcome.previous && is_negative(*outcome.previous) && is_positive(outcome.current);
  const double r_emo = improved ? weights.eta : 0.0;
  return combine_reward(r_eng, r_emo, causal_bonus(outcome, targets), vulnerable, weights);
}

std::vector<RewardTarget> reward_targets(const std::vector<ParentSet>& parents,
                                         const std::vector<std::string>& names) {
  std::vector<RewardTarget> out;
  for (const auto& name : names) {
    const auto it = std::find_if(parents.begin(), parents.end(),
                                 [&](const ParentSet& p) { return p.target == name; });
    if (it == parents.end()) throw MissingArtifactError("no parent set for reward target '" + name + "'");
    const bool lower = name.size() >= 8 && name.compare(name.size() - 8, 8, "stressed") == 0;
    out.push_back(RewardTarget{*it, lower ? -1.0 : 1.0});
  }
  return out;
}

std::vector<StepLog> run_episode(const EpisodeEnv& env, const UserProfile& user, const QTable& table,
                                 const ActionMode& mode, Rng& action_rng, std::uint64_t seed,
                                 std::string_view sim_tag, QTable* learner, ReplayBuffer* replay,
                                 int epoch) {
  const DaySimulator& sim = env.simulator;
  const AgentConfig& cfg = env.config;
  const JournalConfig& jc = sim.journal_config();
  UserSimState state(user, env.catalog.size(), Rng(0));
  std::vector<DayOutcome> history;
  std::vector<UserEmotion> labels;
  std::optional<DailyRecord> previous;
  std::vector<StepLog> logs;
  logs.reserve(static_cast<std::size_t>(env.days));

  for (int day = 1; day <= env.days; ++day) {
    state.rng = Rng::stream(seed, sim_tag, (static_cast<std::uint64_t>(user.id) << 16) | static_cast<std::uint64_t>(day));
    const bool vulnerable = is_vulnerable(labels, cfg.vulnerable_streak);
    const PolicyKind kind = env.agent_enabled && vulnerable ? PolicyKind::kAgent : PolicyKind::kScorer;
    const int s = encode_state(history, env.tertiles).index();
    const ScorerContext ctx{user.tier, labels.empty() ? 6 : static_cast<int>(index_of(labels.back())),
                            user.favorite_category};
    const std::vector<int>& ranking = env.rankings.ranking(ctx);
    int action = -1;

    const FeedProvider provider = [&](const FeedRequest& req) {
      const auto m = static_cast<std::size_t>(std::max<long long>(0, std::llround(req.budget_s / jc.mean_video_s)));
      Feed feed;
      if (kind == PolicyKind::kAgent) {
        action = mode.greedy ? table.argmax(s) : boltzmann_select(table, s, mode.temperature, action_rng);
        feed.groups.push_back(resolve_action(ActionKey::from_index(action), ranking, env.catalog, req.state,
                                             req.day, m, jc.recency_days));
      } else {
        feed.groups.push_back(scorer_slate(ranking, req.state, req.day, m, jc.recency_days));
        if (!feed.groups.back().empty()) {
          const VideoItem& top = env.catalog[static_cast<std::size_t>(feed.groups.back().front())];
          action = ActionKey{top.category, top.emotion}.index();
        }
      }
      return feed;
    };
    DailyRecord rec = sim.step(state, day, provider);

    StepLog log;
    log.epoch = epoch;
    log.user = user.id;
    log.day = day;
    log.latent = rec.latent;
    if (rec.churned) {
      DayOutcome out;
      out.day = day;
      history.push_back(out);
      labels.push_back(UserEmotion::kChurned);
      logs.push_back(log);
      previous = std::move(rec);
      continue;
    }

    FeatureRow row = make_feature_row(rec, previous ? &*previous : nullptr, user);
    fill_label_features(row, labels);
    const UserEmotion label = env.classifier.predict(row);

    RewardOutcome outcome;
    outcome.engagement = rec.engagement;
    outcome.tau = sim.tau();
    if (!labels.empty()) outcome.previous = labels.back();
    outcome.current = label;
    outcome.features = causal_features(row, label);
    if (!history.empty() && !history.back().churned) outcome.previous_features = history.back().features;
    const RewardBreakdown reward = compute_reward(outcome, env.targets, vulnerable, cfg.reward);

    DayOutcome out;
    out.day = day;
    out.churned = false;
    out.label = label;
    out.engagement = rec.engagement;
    out.dominant_category = row.categorical[1];
    out.features = outcome.features;
    history.push_back(out);
    labels.push_back(label);
    const int s_next = day == env.days ? -1 : encode_state(history, env.tertiles).index();

    if (learner && action >= 0) {
      q_update(*learner, s, action, reward.total, s_next, cfg.learning_rate, cfg.discount);
      if (replay) replay->push(Transition{s, action, reward.total, s_next});
    }

    log.state = s;
    log.action = action;
    log.policy = kind;
    log.reward = reward;
    log.emotion = label;
    log.engagement = rec.engagement;
    logs.push_back(log);
    previous = std::move(rec);
  }
  return logs;
}

namespace {

double entropy_of_counts(const std::vector<std::size_t>& counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (n == 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

AgentTraining train_agent(const EpisodeEnv& env, const std::vector<UserProfile>& users,
                          std::uint64_t seed) {
  const AgentConfig& cfg = env.config;
  if (cfg.epochs < 0) throw ConfigError("policy.epochs must be >= 0");
  if (!(cfg.temperature > 0.0)) throw ConfigError("policy.temperature must be positive");
  if (!(cfg.temperature_decay > 0.0 && cfg.temperature_decay < 1.0)) {
    throw ConfigError("policy.temperature_decay must lie in (0, 1)");
  }
  AgentTraining out;
  ReplayBuffer replay(cfg.replay_capacity);
  Rng action_rng = Rng::stream(seed, "agent-actions");
  Rng replay_rng = Rng::stream(seed, "agent-replay");
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochSummary summary;
    summary.epoch = e;
    summary.temperature = cfg.temperature * std::pow(cfg.temperature_decay, e);
    const ActionMode mode{false, summary.temperature};
    std::vector<std::size_t> action_counts(kActions, 0);
    double reward_sum = 0.0;
    for (const UserProfile& u : users) {
      auto logs = run_episode(env, u, out.table, mode, action_rng, seed, "agent-train", &out.table, &replay, e);
      for (const StepLog& s : logs) {
        reward_sum += s.reward.total;
        if (s.policy == PolicyKind::kAgent) {
          ++action_counts[static_cast<std::size_t>(s.action)];
          ++summary.agent_steps;
        }
      }
      for (const Transition& t : replay.sample(cfg.replay_batch, replay_rng)) {
        q_update(out.table, t.s, t.a, t.r, t.s_next, cfg.learning_rate, cfg.discount);
      }
      out.logs.insert(out.logs.end(), logs.begin(), logs.end());
    }
    summary.mean_episode_reward = users.empty() ? 0.0 : reward_sum / static_cast<double>(users.size());
    summary.action_entropy = entropy_of_counts(action_counts);
    out.epochs.push_back(summary);
  }
  return out;
}

std::vector<StepLog> evaluate_policy(const EpisodeEnv& env, const std::vector<UserProfile>& users,
                                     const QTable& table, std::uint64_t seed, int threads) {
  std::vector<std::vector<StepLog>> per_user(users.size());
  parallel_for(users.size(), threads, [&](std::size_t i) {
    Rng unused(0);  // greedy actions draw nothing
    per_user[i] = run_episode(env, users[i], table, ActionMode{true, 1.0}, unused, seed, "eval", nullptr,
                              nullptr, -1);
  });
  std::vector<StepLog> out;
  out.reserve(users.size() * static_cast<std::size_t>(env.days));
  for (auto& v : per_user) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::string step_log_jsonl(const StepLog& s) {
  nlohmann::ordered_json j;
  j["epoch"] = s.epoch;
  j["user"] = s.user;
  j["day"] = s.day;
  j["state"] = s.state;
  j["action"] = s.action;
  j["policy"] = s.policy ? nlohmann::ordered_json(std::string(to_string(*s.policy)))
                         : nlohmann::ordered_json(nullptr);
  j["r_eng"] = s.reward.r_eng;
  j["r_emo"] = s.reward.r_emo;
  j["r_cause"] = s.reward.r_cause;
  j["w_eng"] = s.reward.engagement_weight;
  j["alpha_emo"] = s.reward.alpha_emo;
  j["beta"] = s.reward.beta;
  j["amplification"] = s.reward.amplification;
  j["vulnerable"] = s.reward.vulnerable;
  j["beta_eff"] = s.reward.beta_effective();
  j["total"] = s.reward.total;
  j["emotion"] = std::string(to_string(s.emotion));
  j["engagement"] = s.engagement;
  return j.dump();
}

std::vector<StepLog> step_logs_from_jsonl(const std::string& text) {
  std::vector<StepLog> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StepLog s;
      s.epoch = j.at("epoch").get<int>();
      s.user = j.at("user").get<int>();
      s.day = j.at("day").get<int>();
      s.state = j.at("state").get<int>();
      s.action = j.at("action").get<int>();
      if (!j.at("policy").is_null()) {
        s.policy = j.at("policy").get<std::string>() == "agent" ? PolicyKind::kAgent : PolicyKind::kScorer;
      }
      s.reward.r_eng = j.at("r_eng").get<double>();
      s.reward.r_emo = j.at("r_emo").get<double>();
      s.reward.r_cause = j.at("r_cause").get<double>();
      s.reward.engagement_weight = j.at("w_eng").get<double>();
      s.reward.alpha_emo = j.at("alpha_emo").get<double>();
      s.reward.beta = j.at("beta").get<double>();
      s.reward.amplification = j.at("amplification").get<double>();
      s.reward.vulnerable = j.at("vulnerable").get<bool>();
      s.reward.total = j.at("total").get<double>();
      s.emotion = parse_user_emotion(j.at("emotion").get<std::string>());
      s.engagement = j.at("engagement").get<double>();
      out.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error("step log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace esmr
