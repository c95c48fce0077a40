#include "esmr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace esmr {

namespace {

bool high_positive(UserEmotion e) { return e == UserEmotion::kHappy || e == UserEmotion::kExcited; }
bool high_negative(UserEmotion e) { return e == UserEmotion::kStressed || e == UserEmotion::kFrustrated; }

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

}  // namespace

std::vector<UserTrajectory> trajectories_from_logs(std::span<const StepLog> logs, int horizon) {
  std::map<int, UserTrajectory> by_user;
  std::map<int, std::vector<char>> seen;
  for (const StepLog& s : logs) {
    if (s.day < 1 || s.day > horizon) throw Error("incomplete logs: day " + std::to_string(s.day) + " outside horizon");
    auto& t = by_user[s.user];
    auto& mark = seen[s.user];
    if (t.labels.empty()) {
      t.user = s.user;
      t.labels.assign(static_cast<std::size_t>(horizon), UserEmotion::kChurned);
      t.r_eng.assign(static_cast<std::size_t>(horizon), 0.0);
      t.r_cause.assign(static_cast<std::size_t>(horizon), 0.0);
      mark.assign(static_cast<std::size_t>(horizon), 0);
    }
    const auto d = static_cast<std::size_t>(s.day - 1);
    if (mark[d]) throw Error("incomplete logs: user " + std::to_string(s.user) + " day " + std::to_string(s.day) + " repeated");
    mark[d] = 1;
    t.labels[d] = s.emotion;
    t.r_eng[d] = s.policy ? s.reward.r_eng : 0.0;
    t.r_cause[d] = s.policy ? s.reward.r_cause : 0.0;
  }
  std::vector<UserTrajectory> out;
  for (auto& [id, t] : by_user) {
    const auto& mark = seen[id];
    if (std::find(mark.begin(), mark.end(), 0) != mark.end()) {
      throw Error("incomplete logs: user " + std::to_string(id) + " is missing days");
    }
    out.push_back(std::move(t));
  }
  return out;
}

int recovery_time(std::span<const UserEmotion> labels, int hold) {
  int run = 0;
  for (std::size_t d = 0; d < labels.size(); ++d) {
    run = is_positive(labels[d]) ? run + 1 : 0;
    if (run >= hold) return static_cast<int>(d + 1) - run;
  }
  return static_cast<int>(labels.size());
}

double emotion_volatility(std::span<const UserEmotion> labels) {
  double n = 0.0, sum = 0.0, sq = 0.0;
  for (UserEmotion e : labels) {
    if (e == UserEmotion::kChurned) continue;
    const double v = valence(e);
    n += 1.0;
    sum += v;
    sq += v * v;
  }
  if (n == 0.0) return 0.0;
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sq / n - mean * mean));
}

int bounce_events(std::span<const UserEmotion> labels) {
  int n = 0;
  for (std::size_t d = 1; d < labels.size(); ++d) {
    const UserEmotion a = labels[d - 1], b = labels[d];
    if ((high_positive(a) && high_negative(b)) || (high_negative(a) && high_positive(b))) ++n;
  }
  return n;
}

UserMetrics user_metrics(const UserTrajectory& t) {
  UserMetrics m;
  m.user = t.user;
  m.recovery_time = recovery_time(t.labels);
  m.volatility = emotion_volatility(t.labels);
  m.bounce_events = bounce_events(t.labels);
  double valence_sum = 0.0;
  for (std::size_t d = 0; d < t.labels.size(); ++d) {
    const UserEmotion e = t.labels[d];
    if (is_negative(e)) ++m.negative_days;
    if (e != UserEmotion::kChurned) {
      ++m.active_days;
      valence_sum += valence(e);
    }
    m.engagement_reward += t.r_eng[d];
    m.causal_bonus += t.r_cause[d];
  }
  m.mean_valence = m.active_days > 0 ? valence_sum / m.active_days : 0.0;
  if (!t.labels.empty()) m.engagement_reward /= static_cast<double>(t.labels.size());
  return m;
}

RunMetrics aggregate_metrics(std::span<const UserMetrics> users) {
  RunMetrics r;
  r.users = users.size();
  if (users.empty()) return r;
  double active = 0.0, valence_sum = 0.0, bouncers = 0.0;
  for (const UserMetrics& u : users) {
    r.recovery_time_days += u.recovery_time;
    r.negative_emotion_days += u.negative_days;
    r.volatility += u.volatility;
    r.mean_engagement_reward += u.engagement_reward;
    r.cumulative_causal_bonus += u.causal_bonus;
    if (u.bounce_events > 2) bouncers += 1.0;
    active += u.active_days;
    valence_sum += u.mean_valence * u.active_days;
  }
  const double n = static_cast<double>(users.size());
  r.recovery_time_days /= n;
  r.negative_emotion_days /= n;
  r.volatility /= n;
  r.mean_engagement_reward /= n;
  r.cumulative_causal_bonus /= n;
  r.bounce_rate = bouncers / n;
  r.mean_valence = active > 0.0 ? valence_sum / active : 0.0;
  return r;
}

RunMetrics compute_metrics(std::span<const StepLog> logs, int horizon) {
  std::vector<UserMetrics> users;
  for (const auto& t : trajectories_from_logs(logs, horizon)) users.push_back(user_metrics(t));
  return aggregate_metrics(users);
}

std::vector<AblationVariant> default_variants(const RewardWeights& base) {
  AblationVariant full{"full", base, true};
  AblationVariant emotion_off{"emotion_off", base, true};
  emotion_off.weights.alpha_emo = 0.0;
  AblationVariant engagement_off{"engagement_off", base, true};
  engagement_off.weights.engagement = 0.0;
  AblationVariant scorer_only{"scorer_only", base, false};
  return {full, emotion_off, engagement_off, scorer_only};
}

VariantResult run_variant(const EpisodeEnv& base_env, const AblationVariant& variant,
                          const std::vector<UserProfile>& users, std::uint64_t seed, int threads,
                          const QTable* trained) {
  EpisodeEnv env = base_env;
  env.config.reward = variant.weights;
  env.agent_enabled = variant.agent_enabled;
  VariantResult out;
  out.variant = variant;
  QTable table;
  if (variant.agent_enabled) {
    if (trained) {
      table = *trained;
    } else {
      AgentTraining t = train_agent(env, users, seed);
      table = std::move(t.table);
      out.training = std::move(t.epochs);
    }
  }
  out.logs = evaluate_policy(env, users, table, seed, threads);
  for (const auto& t : trajectories_from_logs(out.logs, env.days)) out.users.push_back(user_metrics(t));
  out.metrics = aggregate_metrics(out.users);
  return out;
}

std::vector<VariantResult> run_ablation(const EpisodeEnv& env, const std::vector<AblationVariant>& variants,
                                        const std::vector<UserProfile>& users, std::uint64_t seed,
                                        int threads) {
  std::vector<VariantResult> out;
  for (const auto& v : variants) out.push_back(run_variant(env, v, users, seed, threads));
  return out;
}

std::string metrics_csv(std::span<const VariantResult> results) {
  std::ostringstream out;
  out << "variant,user,recovery_time,negative_days,volatility,bounce_events,mean_valence,active_days,"
         "engagement_reward,causal_bonus\n";
  for (const auto& r : results) {
    for (const auto& u : r.users) {
      out << r.variant.name << ',' << u.user << ',' << u.recovery_time << ',' << u.negative_days << ','
          << fmt(u.volatility) << ',' << u.bounce_events << ',' << fmt(u.mean_valence) << ','
          << u.active_days << ',' << fmt(u.engagement_reward) << ',' << fmt(u.causal_bonus) << '\n';
    }
  }
  return out.str();
}

std::string ablation_csv(std::span<const VariantResult> results) {
  std::ostringstream out;
  out << "variant,users,recovery_time_days,mean_valence,negative_emotion_days,volatility,bounce_rate,"
         "mean_engagement_reward,cumulative_causal_bonus\n";
  for (const auto& r : results) {
    const RunMetrics& m = r.metrics;
    out << r.variant.name << ',' << m.users << ',' << fmt(m.recovery_time_days) << ',' << fmt(m.mean_valence)
        << ',' << fmt(m.negative_emotion_days) << ',' << fmt(m.volatility) << ',' << fmt(m.bounce_rate)
        << ',' << fmt(m.mean_engagement_reward) << ',' << fmt(m.cumulative_causal_bonus) << '\n';
  }
  return out.str();
}

std::string trajectories_jsonl(std::span<const StepLog> logs) {
  std::string out;
  for (const StepLog& s : logs) {
    nlohmann::ordered_json j;
    j["user"] = s.user;
    j["day"] = s.day;
    j["emotion"] = std::string(to_string(s.emotion));
    j["valence"] = s.emotion == UserEmotion::kChurned ? nlohmann::ordered_json(nullptr)
                                                      : nlohmann::ordered_json(valence(s.emotion));
    j["policy"] = s.policy ? nlohmann::ordered_json(std::string(to_string(*s.policy)))
                           : nlohmann::ordered_json(nullptr);
    j["action"] = s.action;
    j["engagement"] = s.engagement;
    j["total"] = s.reward.total;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string report_markdown(std::span<const VariantResult> results, const std::string& run_id) {
  std::ostringstream out;
  out << "# ESMR evaluation report\n\nRun `" << run_id << "`.\n\n";
  out << "| variant | users | negative days | recovery (days) | valence | volatility | bounce rate | "
         "engagement reward | causal bonus |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : results) {
    const RunMetrics& m = r.metrics;
    out << "| " << r.variant.name << " | " << m.users << " | " << m.negative_emotion_days << " | "
        << m.recovery_time_days << " | " << m.mean_valence << " | " << m.volatility << " | " << m.bounce_rate
        << " | " << m.mean_engagement_reward << " | " << m.cumulative_causal_bonus << " |\n";
  }
  const VariantResult* full = nullptr;
  const VariantResult* base = nullptr;
  for (const auto& r : results) {
    if (r.variant.name == "full") full = &r;
    if (r.variant.name == "scorer_only") base = &r;
  }
  if (full && base && full->metrics.users > 0) {
    const RunMetrics& a = full->metrics;
    const RunMetrics& b = base->metrics;
    auto change = [](double x, double y) { return y != 0.0 ? 100.0 * (x - y) / std::abs(y) : 0.0; };
    out << "\nFull ESMR against the scorer-only baseline:\n\n";
    out << "- negative-emotion days " << b.negative_emotion_days << " -> " << a.negative_emotion_days << "\n";
    out << "- bounce rate " << b.bounce_rate << " -> " << a.bounce_rate << "\n";
    out << "- volatility change " << change(a.volatility, b.volatility) << "%\n";
    out << "- engagement reward change " << change(a.mean_engagement_reward, b.mean_engagement_reward) << "%\n";
  }
  for (const auto& r : results) {
    if (r.training.empty()) continue;
    out << "\nTraining `" << r.variant.name << "`: mean episode reward by epoch";
    for (const auto& e : r.training) out << (e.epoch == 0 ? " " : ", ") << e.mean_episode_reward;
    out << "\n";
  }
  return out.str();
}

}  // namespace esmr
