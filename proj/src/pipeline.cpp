#include "esmr/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <memory>
#include <map>
#include <utility>

#include <json.hpp>

#include "esmr/bench.hpp"
#include "esmr/causal.hpp"
#include "esmr/io.hpp"

namespace esmr {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

using Artifacts = std::vector<std::pair<std::string, std::string>>;

struct StageSpec {
  std::string_view name;
  int version;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

const std::vector<StageSpec>& specs() {
  static const std::vector<StageSpec> all = {
      {"simulate", 1, {},
       {"catalog.csv", "catalog.jsonl", "users.csv", "users.jsonl", "records.csv", "records.jsonl",
        "features.csv", "features.jsonl", "simulate.json"}},
      {"label", 1, {"users.jsonl", "records.jsonl"},
       {"labels.csv", "clusters.json", "elbow.csv", "classifier.json", "confusion.csv", "label_report.json"}},
      {"discover", 1, {"users.jsonl", "records.jsonl", "labels.csv"},
       {"edges.csv", "causal_order.txt", "parents.json"}},
      {"train-scorer", 1, {"catalog.jsonl", "users.jsonl", "records.jsonl", "labels.csv"}, {"scorer.json"}},
      {"train-agent", 1,
       {"catalog.jsonl", "users.jsonl", "records.jsonl", "simulate.json", "labels.csv", "classifier.json",
        "parents.json", "scorer.json"},
       {"qtable.csv", "training.csv"}},
      {"evaluate", 1,
       {"catalog.jsonl", "users.jsonl", "records.jsonl", "simulate.json", "labels.csv", "classifier.json",
        "parents.json", "scorer.json", "qtable.csv"},
       {"steps.jsonl", "metrics.csv", "trajectories.jsonl"}},
      {"ablate", 1,
       {"catalog.jsonl", "users.jsonl", "records.jsonl", "simulate.json", "labels.csv", "classifier.json",
        "parents.json", "scorer.json", "qtable.csv"},
       {"ablation.csv", "ablation_training.csv", "report.md"}},
  };
  return all;
}

const StageSpec& spec(std::string_view stage) {
  for (const auto& s : specs()) {
    if (s.name == stage) return s;
  }
  throw ConfigError("unknown stage '" + std::string(stage) + "'");
}

std::string producer(const std::string& file) {
  for (const auto& s : specs()) {
    for (const auto& o : s.outputs) {
      if (o == file) return std::string(s.name);
    }
  }
  return "?";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Everything the later stages read back from the run directory.
struct Inputs {
  const RunConfig& cfg;
  fs::path dir;
  int threads;

  Catalog catalog() const { return catalog_from_jsonl(read_file(dir / "catalog.jsonl")); }
  std::vector<UserProfile> users() const { return users_from_jsonl(read_file(dir / "users.jsonl")); }

  Dataset dataset(const std::vector<UserProfile>& users) const {
    Dataset ds;
    ds.records = records_from_jsonl(read_file(dir / "records.jsonl"));
    ds.features = rebuild_features(ds.records, users);
    ds.days = cfg.population.horizon_days;
    if (fs::exists(dir / "simulate.json")) {
      try {
        const json meta = json::parse(read_file(dir / "simulate.json"));
        ds.tau = meta.at("tau").get<double>();
        ds.days = meta.at("days").get<int>();
      } catch (const json::exception& e) {
        throw Error(std::string("simulate.json: ") + e.what());
      }
    }
    return ds;
  }

  std::vector<DayLabel> labels() const { return labels_from_csv(read_file(dir / "labels.csv")); }
};

std::vector<UserEmotion> label_values(const std::vector<DayLabel>& labels) {
  std::vector<UserEmotion> y;
  y.reserve(labels.size());
  for (const auto& l : labels) y.push_back(l.label);
  return y;
}

Artifacts simulate(const Inputs& in) {
  const RunConfig& cfg = in.cfg;
  const Catalog catalog = generate_catalog(cfg.catalog.size, cfg.seed, cfg.catalog);
  const auto users = generate_users(cfg.population.size, cfg.seed, cfg.population);
  const Dataset ds =
      build_dataset(users, catalog, cfg.population.horizon_days, cfg.seed, cfg.population, cfg.journal, in.threads);
  ordered_json meta;
  meta["tau"] = ds.tau;
  meta["days"] = ds.days;
  meta["users"] = users.size();
  meta["videos"] = catalog.size();
  meta["records"] = ds.records.size();
  std::size_t active = 0;
  for (const auto& r : ds.records) active += r.active() ? 1 : 0;
  meta["active_records"] = active;
  meta["continuous_features"] = kContinuousFeatureNames;
  meta["categorical_features"] = kCategoricalFeatureNames;
  return {{"catalog.csv", catalog_csv(catalog)},
          {"catalog.jsonl", catalog_jsonl(catalog)},
          {"users.csv", users_csv(users)},
          {"users.jsonl", users_jsonl(users)},
          {"records.csv", records_csv(ds.records)},
          {"records.jsonl", records_jsonl(ds.records)},
          {"features.csv", features_csv(ds.features)},
          {"features.jsonl", features_jsonl(ds.features)},
          {"simulate.json", meta.dump(2) + "\n"}};
}

Artifacts label(const Inputs& in) {
  const auto users = in.users();
  Dataset ds = in.dataset(users);
  const Labeling lab = label_dataset(ds, in.cfg.affect, in.cfg.seed);
  const auto y = label_values(lab.labels);
  const ClassifierReport rep = train_classifier(ds.features, y, in.cfg.affect, in.cfg.seed);

  ordered_json clusters;
  clusters["features"] = lab.model.feature_names;
  clusters["means"] = std::vector<double>(lab.model.means.data(), lab.model.means.data() + lab.model.means.size());
  clusters["stds"] = std::vector<double>(lab.model.stds.data(), lab.model.stds.data() + lab.model.stds.size());
  ordered_json centroids = ordered_json::array();
  for (Eigen::Index c = 0; c < lab.model.centroids.rows(); ++c) {
    ordered_json row;
    row["emotion"] = to_string(lab.cluster_labels[static_cast<std::size_t>(c)]);
    std::vector<double> v(static_cast<std::size_t>(lab.model.centroids.cols()));
    for (Eigen::Index j = 0; j < lab.model.centroids.cols(); ++j) v[static_cast<std::size_t>(j)] = lab.model.centroids(c, j);
    row["centroid"] = v;
    centroids.push_back(row);
  }
  clusters["clusters"] = centroids;
  clusters["inertia"] = lab.model.inertia;

  ordered_json report;
  report["accuracy"] = rep.accuracy;
  report["train_rows"] = rep.train_rows;
  report["test_rows"] = rep.test_rows;
  ordered_json counts;
  std::array<std::size_t, kUserEmotionCount> n{};
  std::size_t overrides = 0;
  for (const auto& l : lab.labels) {
    ++n[index_of(l.label)];
    overrides += l.override_applied ? 1 : 0;
  }
  for (UserEmotion e : kAllUserEmotions) counts[std::string(to_string(e))] = n[index_of(e)];
  report["label_counts"] = counts;
  report["overrides_applied"] = overrides;

  return {{"labels.csv", labels_csv(lab.labels)},
          {"clusters.json", clusters.dump(2) + "\n"},
          {"elbow.csv", elbow_csv(lab.elbow, in.cfg.affect.elbow_min)},
          {"classifier.json", rep.model.to_json()},
          {"confusion.csv", confusion_csv(rep.confusion)},
          {"label_report.json", report.dump(2) + "\n"}};
}

Artifacts discover_stage(const Inputs& in) {
  const auto users = in.users();
  Dataset ds = in.dataset(users);
  const auto labels = in.labels();
  attach_labels(ds, labels);
  const CausalDataset cds = build_causal_dataset(ds.records, ds.features, label_values(labels));
  const CausalGraph g = discover(cds, in.cfg.causal.prune_threshold);
  if (!validate_dag(g)) throw Error("discovered graph is not acyclic along its causal order");
  std::vector<ParentSet> sets;
  for (auto t : kCausalTargets) sets.push_back(extract_parents(g, t));
  std::string order;
  for (std::size_t i : g.causal_order) order += g.names[i] + "\n";
  return {{"edges.csv", edges_csv(g)}, {"causal_order.txt", order}, {"parents.json", parents_to_json(sets)}};
}

Artifacts train_scorer_stage(const Inputs& in) {
  const Catalog catalog = in.catalog();
  const auto users = in.users();
  Dataset ds = in.dataset(users);
  const auto labels = in.labels();
  attach_labels(ds, labels);
  const ScorerDataset data = build_scorer_dataset(ds, label_values(labels), users, catalog);
  ScorerConfig sc = in.cfg.policy.scorer;
  sc.gbdt.threads = in.threads;
  const EngagementScorer scorer = train_scorer(data, sc, in.cfg.seed);
  return {{"scorer.json", scorer.to_json()}};
}

// The frozen pieces an episode needs, kept alive together.
struct World {
  Catalog catalog;
  std::vector<UserProfile> users;
  Dataset ds;
  EmotionClassifier classifier;
  EngagementScorer scorer;
  std::vector<ParentSet> parents;
  std::unique_ptr<DaySimulator> sim;
  std::unique_ptr<RankingCache> rankings;

  EpisodeEnv env(const RunConfig& cfg) const {
    return EpisodeEnv{catalog,
                      *sim,
                      classifier,
                      *rankings,
                      reward_targets(parents, cfg.policy.agent.reward_targets),
                      engagement_tertiles(ds),
                      cfg.policy.agent,
                      ds.days,
                      true};
  }
};

std::unique_ptr<World> load_world(const Inputs& in) {
  auto w = std::make_unique<World>();
  w->catalog = in.catalog();
  w->users = in.users();
  w->ds = in.dataset(w->users);
  attach_labels(w->ds, in.labels());
  w->classifier = EmotionClassifier::from_json(read_file(in.dir / "classifier.json"));
  w->scorer = EngagementScorer::from_json(read_file(in.dir / "scorer.json"));
  w->parents = parents_from_json(read_file(in.dir / "parents.json"));
  w->sim = std::make_unique<DaySimulator>(w->catalog, in.cfg.population, in.cfg.journal, w->ds.tau);
  w->rankings = std::make_unique<RankingCache>(w->scorer, w->catalog, in.threads);
  return w;
}

std::string training_csv(const std::vector<std::pair<std::string, std::vector<EpochSummary>>>& runs) {
  std::string out = "variant,epoch,temperature,mean_episode_reward,action_entropy,agent_steps\n";
  for (const auto& [name, epochs] : runs) {
    for (const auto& e : epochs) {
      out += name + ',' + std::to_string(e.epoch) + ',' + fmt(e.temperature) + ',' + fmt(e.mean_episode_reward) +
             ',' + fmt(e.action_entropy) + ',' + std::to_string(e.agent_steps) + '\n';
    }
  }
  return out;
}

Artifacts train_agent_stage(const Inputs& in) {
  const auto w = load_world(in);
  const AgentTraining t = train_agent(w->env(in.cfg), w->users, in.cfg.seed);
  return {{"qtable.csv", t.table.to_csv()}, {"training.csv", training_csv({{"full", t.epochs}})}};
}

AblationVariant variant_named(const std::string& name, const RewardWeights& base) {
  for (auto& v : default_variants(base)) {
    if (v.name == name) return v;
  }
  throw ConfigError("bench.variants: unknown variant '" + name + "'");
}

Artifacts evaluate_stage(const Inputs& in) {
  const auto w = load_world(in);
  const QTable table = QTable::from_csv(read_file(in.dir / "qtable.csv"));
  const EpisodeEnv env = w->env(in.cfg);
  const RewardWeights& base = in.cfg.policy.agent.reward;
  std::vector<VariantResult> results;
  results.push_back(run_variant(env, variant_named("full", base), w->users, in.cfg.seed, in.threads, &table));
  results.push_back(run_variant(env, variant_named("scorer_only", base), w->users, in.cfg.seed, in.threads));
  std::string steps;
  for (const StepLog& s : results.front().logs) steps += step_log_jsonl(s) + "\n";
  return {{"steps.jsonl", steps},
          {"metrics.csv", metrics_csv(results)},
          {"trajectories.jsonl", trajectories_jsonl(results.front().logs)}};
}

Artifacts ablate_stage(const Inputs& in, const std::string& run_id) {
  const auto w = load_world(in);
  const QTable table = QTable::from_csv(read_file(in.dir / "qtable.csv"));
  const EpisodeEnv env = w->env(in.cfg);
  const RewardWeights& base = in.cfg.policy.agent.reward;
  std::vector<VariantResult> results;
  std::vector<std::pair<std::string, std::vector<EpochSummary>>> training;
  for (const auto& name : in.cfg.bench.variants) {
    const AblationVariant v = variant_named(name, base);
    results.push_back(run_variant(env, v, w->users, in.cfg.seed, in.threads, name == "full" ? &table : nullptr));
    if (!results.back().training.empty()) training.emplace_back(name, results.back().training);
  }
  return {{"ablation.csv", ablation_csv(results)},
          {"ablation_training.csv", training_csv(training)},
          {"report.md", report_markdown(results, run_id)}};
}

json load_manifest(const fs::path& path) {
  if (!fs::exists(path)) return json::object();
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("corrupt manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace

const std::vector<std::string>& stage_outputs(std::string_view stage) { return spec(stage).outputs; }
const std::vector<std::string>& stage_inputs(std::string_view stage) { return spec(stage).inputs; }

Pipeline::Pipeline(RunConfig config, fs::path root, bool force, int threads)
    : config_(std::move(config)), force_(force), threads_(std::max(1, threads)) {
  validate_config(config_);
  hash_ = config_hash(config_);
  dir_ = root / run_id();
}

std::string Pipeline::run_id() const { return hash_.substr(0, 12) + "-seed" + std::to_string(config_.seed); }

std::vector<StageOutcome> Pipeline::run(std::string_view stage) {
  std::vector<StageOutcome> out;
  if (stage == "all") {
    for (auto s : kStages) out.push_back(run_stage(s));
  } else {
    out.push_back(run_stage(stage));
  }
  return out;
}

StageOutcome Pipeline::run_stage(std::string_view stage) {
  const StageSpec& s = spec(stage);
  const auto t0 = std::chrono::steady_clock::now();
  StageOutcome outcome{std::string(stage), false, 0.0};

  for (const auto& file : s.inputs) {
    if (!fs::exists(dir_ / file)) {
      const std::string need = producer(file);
      throw MissingArtifactError("'" + std::string(stage) + "' needs " + file + " in " + dir_.string() +
                                 "; run `esmr " + need + "` first (same --config, --seed and --smoke)");
    }
  }
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("cannot create run directory " + dir_.string() + ": " + ec.message());

  const fs::path manifest_path = dir_ / "manifest.json";
  json manifest = load_manifest(manifest_path);
  json inputs = json::object();
  for (const auto& file : s.inputs) inputs[file] = sha256_file(dir_ / file);

  if (!force_ && manifest.contains("stages") && manifest["stages"].contains(s.name)) {
    const json& prev = manifest["stages"][std::string(s.name)];
    bool fresh = prev.value("inputs", json::object()) == inputs && prev.value("config_hash", "") == hash_ &&
                 prev.value("stage_version", -1) == s.version;
    if (fresh) {
      const json outs = prev.value("outputs", json::object());
      for (const auto& file : s.outputs) {
        if (!outs.contains(file) || !fs::exists(dir_ / file) || sha256_file(dir_ / file) != outs[file]) {
          fresh = false;
          break;
        }
      }
    }
    if (fresh) {
      outcome.skipped = true;
      return outcome;
    }
  }

  {
    // Where the run lives is not part of what it is.
    ordered_json resolved = ordered_json::parse(config_to_json(config_));
    resolved.erase("output_dir");
    write_file(dir_ / "config.json", resolved.dump(2) + "\n");
  }
  const Inputs in{config_, dir_, threads_};
  Artifacts artifacts;
  if (stage == "simulate") artifacts = simulate(in);
  else if (stage == "label") artifacts = label(in);
  else if (stage == "discover") artifacts = discover_stage(in);
  else if (stage == "train-scorer") artifacts = train_scorer_stage(in);
  else if (stage == "train-agent") artifacts = train_agent_stage(in);
  else if (stage == "evaluate") artifacts = evaluate_stage(in);
  else artifacts = ablate_stage(in, run_id());

  json outputs = json::object();
  for (const auto& [file, data] : artifacts) {
    write_file(dir_ / file, data);
    outputs[file] = sha256_hex(data);
  }
  manifest["version"] = kVersion;
  manifest["config_hash"] = hash_;
  manifest["seed"] = config_.seed;
  manifest["run_id"] = run_id();
  manifest["stages"][std::string(s.name)] = {{"stage_version", s.version},
                                             {"version", kVersion},
                                             {"config_hash", hash_},
                                             {"seed", config_.seed},
                                             {"inputs", inputs},
                                             {"outputs", outputs}};
  write_file(manifest_path, manifest.dump(2) + "\n");
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

}  // namespace esmr
