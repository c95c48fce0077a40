#include "esmr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

namespace esmr {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(const unsigned char* data, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (unsigned int i = 0; i < n; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 15];
  }
  return out;
}

template <typename F>
void each_line(const std::string& text, F&& body) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    body(line, n);
  }
}

json parse_line(const std::string& line, std::size_t n, std::string_view what) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string(what) + " line " + std::to_string(n) + ": " + e.what());
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(data.data(), data.size(), md, &n, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  return hex(md, n);
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
}

// ---- catalog ----

std::string catalog_csv(const Catalog& catalog) {
  std::string out = "id,category,theme,duration_s,emotion,intensity,virality,engagement_score\n";
  for (const VideoItem& v : catalog) {
    out += std::to_string(v.id) + ',' + std::string(to_string(v.category)) + ',' +
           std::string(to_string(v.theme)) + ',' + num(v.duration_s) + ',' + std::string(to_string(v.emotion)) +
           ',' + std::to_string(v.intensity) + ',' + num(v.virality) + ',' + num(v.engagement_score) + '\n';
  }
  return out;
}

std::string catalog_jsonl(const Catalog& catalog) {
  std::string out;
  for (const VideoItem& v : catalog) {
    ordered_json j;
    j["id"] = v.id;
    j["category"] = to_string(v.category);
    j["theme"] = to_string(v.theme);
    j["duration_s"] = v.duration_s;
    j["emotion"] = to_string(v.emotion);
    j["intensity"] = v.intensity;
    j["virality"] = v.virality;
    j["engagement_score"] = v.engagement_score;
    out += j.dump() + '\n';
  }
  return out;
}

Catalog catalog_from_jsonl(const std::string& text) {
  Catalog out;
  each_line(text, [&](const std::string& line, std::size_t n) {
    const json j = parse_line(line, n, "catalog");
    try {
      VideoItem v;
      v.id = j.at("id").get<int>();
      v.category = parse_category(j.at("category").get<std::string>());
      v.theme = parse_theme(j.at("theme").get<std::string>());
      v.duration_s = j.at("duration_s").get<double>();
      v.emotion = parse_video_emotion(j.at("emotion").get<std::string>());
      v.intensity = j.at("intensity").get<int>();
      v.virality = j.at("virality").get<double>();
      v.engagement_score = j.at("engagement_score").get<double>();
      if (v.id != static_cast<int>(out.size())) throw Error("catalog ids must be 0..n-1 in order");
      out.push_back(v);
    } catch (const json::exception& e) {
      throw Error("catalog line " + std::to_string(n) + ": " + e.what());
    }
  });
  if (out.empty()) throw Error("catalog is empty");
  return out;
}

// ---- users ----

std::string users_csv(const std::vector<UserProfile>& users) {
  std::string out =
      "id,tier,gamma_shape,gamma_scale,watch_min_s,watch_max_s,churn_propensity,favorite_category,"
      "login_rate,likes_log_mean,likes_log_sd,post_mean,baseline_valence,initial_valence,"
      "initial_resilience,spike_days\n";
  for (const UserProfile& u : users) {
    std::string spikes;
    for (int d : u.spike_days) spikes += (spikes.empty() ? "" : ";") + std::to_string(d);
    out += std::to_string(u.id) + ',' + std::string(to_string(u.tier)) + ',' + num(u.gamma_shape) + ',' +
           num(u.gamma_scale) + ',' + num(u.watch_min_s) + ',' + num(u.watch_max_s) + ',' +
           num(u.churn_propensity) + ',' + std::string(to_string(static_cast<Category>(u.favorite_category))) +
           ',' + num(u.login_rate) + ',' + num(u.likes_log_mean) + ',' + num(u.likes_log_sd) + ',' +
           num(u.post_mean) + ',' + num(u.baseline_valence) + ',' + num(u.initial_valence) + ',' +
           num(u.initial_resilience) + ',' + spikes + '\n';
  }
  return out;
}

std::string users_jsonl(const std::vector<UserProfile>& users) {
  std::string out;
  for (const UserProfile& u : users) {
    ordered_json j;
    j["id"] = u.id;
    j["tier"] = to_string(u.tier);
    j["gamma_shape"] = u.gamma_shape;
    j["gamma_scale"] = u.gamma_scale;
    j["watch_min_s"] = u.watch_min_s;
    j["watch_max_s"] = u.watch_max_s;
    j["churn_propensity"] = u.churn_propensity;
    j["dirichlet_alpha"] = u.dirichlet_alpha;
    j["favorite_category"] = u.favorite_category;
    j["spike_days"] = u.spike_days;
    j["login_rate"] = u.login_rate;
    j["likes_log_mean"] = u.likes_log_mean;
    j["likes_log_sd"] = u.likes_log_sd;
    j["post_mean"] = u.post_mean;
    j["baseline_valence"] = u.baseline_valence;
    j["initial_valence"] = u.initial_valence;
    j["initial_resilience"] = u.initial_resilience;
    j["activity_windows"] = u.activity_windows;
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<UserProfile> users_from_jsonl(const std::string& text) {
  std::vector<UserProfile> out;
  each_line(text, [&](const std::string& line, std::size_t n) {
    const json j = parse_line(line, n, "users");
    try {
      UserProfile u;
      u.id = j.at("id").get<int>();
      u.tier = parse_tier(j.at("tier").get<std::string>());
      u.gamma_shape = j.at("gamma_shape").get<double>();
      u.gamma_scale = j.at("gamma_scale").get<double>();
      u.watch_min_s = j.at("watch_min_s").get<double>();
      u.watch_max_s = j.at("watch_max_s").get<double>();
      u.churn_propensity = j.at("churn_propensity").get<double>();
      u.dirichlet_alpha = j.at("dirichlet_alpha").get<std::array<double, kCategoryCount>>();
      u.favorite_category = j.at("favorite_category").get<int>();
      u.spike_days = j.at("spike_days").get<std::vector<int>>();
      u.login_rate = j.at("login_rate").get<double>();
      u.likes_log_mean = j.at("likes_log_mean").get<double>();
      u.likes_log_sd = j.at("likes_log_sd").get<double>();
      u.post_mean = j.at("post_mean").get<double>();
      u.baseline_valence = j.at("baseline_valence").get<double>();
      u.initial_valence = j.at("initial_valence").get<double>();
      u.initial_resilience = j.at("initial_resilience").get<double>();
      u.activity_windows = j.at("activity_windows").get<std::array<double, 2>>();
      if (u.id != static_cast<int>(out.size())) throw Error("user ids must be 0..n-1 in order");
      out.push_back(std::move(u));
    } catch (const json::exception& e) {
      throw Error("users line " + std::to_string(n) + ": " + e.what());
    }
  });
  if (out.empty()) throw Error("user roster is empty");
  return out;
}

// ---- records ----

std::string records_csv(const std::vector<DailyRecord>& records) {
  std::string out =
      "user_id,day,churned,scroll_s,watch_budget_s,watch_s,multiplier,engagement,delta_e,"
      "scroll_watch_ratio,time_educational,time_entertainment,time_news,time_inspirational,logins,posts,"
      "likes,comments,shares,n_watched,n_skipped,mean_intensity,mean_video_valence,mean_video_score,"
      "high_arousal_share,dominant_emotion\n";
  for (const DailyRecord& r : records) {
    out += std::to_string(r.user_id) + ',' + std::to_string(r.day) + ',' + (r.churned ? "1" : "0") + ',' +
           num(r.scroll_s) + ',' + num(r.watch_budget_s) + ',' + num(r.watch_s) + ',' + num(r.multiplier) + ',' +
           num(r.engagement) + ',' + num(r.delta_e) + ',' + num(r.scroll_watch_ratio);
    for (double t : r.category_time) out += ',' + num(t);
    const Interactions& i = r.interactions;
    out += ',' + std::to_string(i.logins) + ',' + std::to_string(i.posts) + ',' + std::to_string(i.likes) + ',' +
           std::to_string(i.comments) + ',' + std::to_string(i.shares) + ',' + std::to_string(r.assigned.size()) +
           ',' + std::to_string(r.skipped.size()) + ',' + num(r.mean_intensity) + ',' +
           num(r.mean_video_valence) + ',' + num(r.mean_video_score) + ',' + num(r.high_arousal_share) + ',' +
           (r.dominant_emotion ? std::string(to_string(*r.dominant_emotion)) : std::string()) + '\n';
  }
  return out;
}

std::string records_jsonl(const std::vector<DailyRecord>& records) {
  std::string out;
  for (const DailyRecord& r : records) {
    ordered_json j;
    j["user_id"] = r.user_id;
    j["day"] = r.day;
    j["churned"] = r.churned;
    ordered_json assigned = ordered_json::array();
    for (const Assignment& a : r.assigned) assigned.push_back({a.video_id, a.minute});
    j["assigned"] = std::move(assigned);
    j["skipped"] = r.skipped;
    j["scroll_s"] = r.scroll_s;
    j["watch_budget_s"] = r.watch_budget_s;
    j["watch_s"] = r.watch_s;
    j["multiplier"] = r.multiplier;
    j["engagement"] = r.engagement;
    j["delta_e"] = r.delta_e;
    j["scroll_watch_ratio"] = r.scroll_watch_ratio;
    j["category_time"] = r.category_time;
    j["logins"] = r.interactions.logins;
    j["posts"] = r.interactions.posts;
    j["likes"] = r.interactions.likes;
    j["comments"] = r.interactions.comments;
    j["shares"] = r.interactions.shares;
    j["mean_intensity"] = r.mean_intensity;
    j["mean_video_valence"] = r.mean_video_valence;
    j["mean_video_score"] = r.mean_video_score;
    j["high_arousal_share"] = r.high_arousal_share;
    j["dominant_emotion"] = r.dominant_emotion ? ordered_json(std::string(to_string(*r.dominant_emotion)))
                                               : ordered_json(nullptr);
    // Simulator ground truth, for analysis only.
    j["latent"] = {r.latent.valence, r.latent.arousal, r.latent.resilience};
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<DailyRecord> records_from_jsonl(const std::string& text) {
  std::vector<DailyRecord> out;
  each_line(text, [&](const std::string& line, std::size_t n) {
    const json j = parse_line(line, n, "records");
    try {
      DailyRecord r;
      r.user_id = j.at("user_id").get<int>();
      r.day = j.at("day").get<int>();
      r.churned = j.at("churned").get<bool>();
      for (const auto& a : j.at("assigned")) r.assigned.push_back(Assignment{a.at(0).get<int>(), a.at(1).get<int>()});
      r.skipped = j.at("skipped").get<std::vector<int>>();
      r.scroll_s = j.at("scroll_s").get<double>();
      r.watch_budget_s = j.at("watch_budget_s").get<double>();
      r.watch_s = j.at("watch_s").get<double>();
      r.multiplier = j.at("multiplier").get<double>();
      r.engagement = j.at("engagement").get<double>();
      r.delta_e = j.at("delta_e").get<double>();
      r.scroll_watch_ratio = j.at("scroll_watch_ratio").get<double>();
      r.category_time = j.at("category_time").get<std::array<double, kCategoryCount>>();
      r.interactions.logins = j.at("logins").get<std::int64_t>();
      r.interactions.posts = j.at("posts").get<std::int64_t>();
      r.interactions.likes = j.at("likes").get<std::int64_t>();
      r.interactions.comments = j.at("comments").get<std::int64_t>();
      r.interactions.shares = j.at("shares").get<std::int64_t>();
      r.mean_intensity = j.at("mean_intensity").get<double>();
      r.mean_video_valence = j.at("mean_video_valence").get<double>();
      r.mean_video_score = j.at("mean_video_score").get<double>();
      r.high_arousal_share = j.at("high_arousal_share").get<double>();
      if (const auto& e = j.at("dominant_emotion"); !e.is_null()) {
        r.dominant_emotion = parse_user_emotion(e.get<std::string>());
      }
      const auto& latent = j.at("latent");
      r.latent = AffectState{latent.at(0).get<double>(), latent.at(1).get<double>(), latent.at(2).get<double>()};
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error("records line " + std::to_string(n) + ": " + e.what());
    }
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    const auto& a = out[i - 1];
    const auto& b = out[i];
    if (b.user_id < a.user_id || (b.user_id == a.user_id && b.day != a.day + 1)) {
      throw Error("records must be ordered by (user, day) without gaps");
    }
  }
  return out;
}

// ---- features ----

std::string features_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "user_id,day";
  for (auto n : kContinuousFeatureNames) out += ',' + std::string(n);
  for (auto n : kCategoricalFeatureNames) out += ',' + std::string(n);
  out += '\n';
  for (const FeatureRow& r : rows) {
    out += std::to_string(r.user_id) + ',' + std::to_string(r.day);
    for (double x : r.continuous) out += ',' + num(x);
    for (int c : r.categorical) out += ',' + std::to_string(c);
    out += '\n';
  }
  return out;
}

std::string features_jsonl(const std::vector<FeatureRow>& rows) {
  std::string out;
  for (const FeatureRow& r : rows) {
    ordered_json j;
    j["user_id"] = r.user_id;
    j["day"] = r.day;
    for (std::size_t i = 0; i < kContinuousFeatureCount; ++i) j[std::string(kContinuousFeatureNames[i])] = r.continuous[i];
    for (std::size_t i = 0; i < kCategoricalFeatureCount; ++i) {
      j[std::string(kCategoricalFeatureNames[i])] = r.categorical[i];
    }
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<FeatureRow> rebuild_features(const std::vector<DailyRecord>& records,
                                         const std::vector<UserProfile>& users) {
  std::vector<FeatureRow> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const DailyRecord& r = records[i];
    if (r.user_id < 0 || static_cast<std::size_t>(r.user_id) >= users.size()) {
      throw Error("record names unknown user " + std::to_string(r.user_id));
    }
    const bool first = i == 0 || records[i - 1].user_id != r.user_id;
    out[i] = make_feature_row(r, first ? nullptr : &records[i - 1], users[static_cast<std::size_t>(r.user_id)]);
  }
  return out;
}

void attach_labels(Dataset& ds, const std::vector<DayLabel>& labels) {
  if (labels.size() != ds.records.size() || ds.features.size() != ds.records.size()) {
    throw Error("labels do not align with the dataset");
  }
  std::vector<UserEmotion> history;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    DailyRecord& r = ds.records[i];
    if (labels[i].user_id != r.user_id || labels[i].day != r.day) {
      throw Error("labels do not align with the dataset at user " + std::to_string(r.user_id) + " day " +
                  std::to_string(r.day));
    }
    if (i == 0 || ds.records[i - 1].user_id != r.user_id) history.clear();
    fill_label_features(ds.features[i], history);
    r.dominant_emotion = labels[i].label;
    history.push_back(labels[i].label);
  }
}

// ---- labels ----

std::string labels_csv(const std::vector<DayLabel>& labels) {
  std::string out = "user_id,day,cluster,label,override_applied\n";
  for (const DayLabel& l : labels) {
    out += std::to_string(l.user_id) + ',' + std::to_string(l.day) + ',' + std::to_string(l.cluster) + ',' +
           std::string(to_string(l.label)) + ',' + (l.override_applied ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<DayLabel> labels_from_csv(const std::string& text) {
  std::vector<DayLabel> out;
  bool header = true;
  each_line(text, [&](const std::string& line, std::size_t n) {
    if (header) {
      header = false;
      if (line.rfind("user_id,day,cluster,label,override_applied", 0) != 0) throw Error("labels.csv: bad header");
      return;
    }
    const auto f = split(line, ',');
    if (f.size() != 5) throw Error("labels.csv line " + std::to_string(n) + ": expected 5 fields");
    try {
      out.push_back(DayLabel{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), parse_user_emotion(f[3]), f[4] == "1"});
    } catch (const std::invalid_argument&) {
      throw Error("labels.csv line " + std::to_string(n) + ": not a number");
    }
  });
  return out;
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "true\\predicted";
  for (UserEmotion e : kAllUserEmotions) out += ',' + std::string(to_string(e));
  out += '\n';
  for (std::size_t i = 0; i < kUserEmotionCount; ++i) {
    out += std::string(to_string(kAllUserEmotions[i]));
    for (std::size_t j = 0; j < kUserEmotionCount; ++j) out += ',' + std::to_string(m[i][j]);
    out += '\n';
  }
  return out;
}

std::string elbow_csv(const std::vector<double>& inertia, int k_min) {
  std::string out = "k,inertia\n";
  for (std::size_t i = 0; i < inertia.size(); ++i) out += std::to_string(k_min + static_cast<int>(i)) + ',' + num(inertia[i]) + '\n';
  return out;
}

}  // namespace esmr
