// A small in-memory pipeline (smoke scale) for tests that need trained
// components: classifier, scorer, parent sets and an episode environment.
#pragma once

#include <memory>

#include "esmr/config.hpp"
#include "esmr/policy.hpp"

namespace esmr::oracle {

struct World {
  RunConfig cfg;
  Catalog catalog;
  std::vector<UserProfile> users;
  Dataset ds;
  std::vector<UserEmotion> labels;
  EmotionClassifier classifier;
  EngagementScorer scorer;
  std::vector<ParentSet> parents;
  std::unique_ptr<DaySimulator> sim;
  std::unique_ptr<RankingCache> rankings;

  EpisodeEnv env() const {
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

inline std::unique_ptr<World> smoke_world(std::uint64_t seed) {
  auto w = std::make_unique<World>();
  w->cfg.seed = seed;
  apply_smoke(w->cfg);
  const RunConfig& cfg = w->cfg;
  w->catalog = generate_catalog(cfg.catalog.size, seed, cfg.catalog);
  w->users = generate_users(cfg.population.size, seed, cfg.population);
  w->ds = build_dataset(w->users, w->catalog, cfg.population.horizon_days, seed, cfg.population, cfg.journal);
  const Labeling lab = label_dataset(w->ds, cfg.affect, seed);
  for (const auto& l : lab.labels) w->labels.push_back(l.label);
  w->classifier = train_classifier(w->ds.features, w->labels, cfg.affect, seed).model;
  const CausalGraph g = discover(build_causal_dataset(w->ds.records, w->ds.features, w->labels));
  for (auto t : kCausalTargets) w->parents.push_back(extract_parents(g, t));
  w->scorer = train_scorer(build_scorer_dataset(w->ds, w->labels, w->users, w->catalog), cfg.policy.scorer, seed);
  w->sim = std::make_unique<DaySimulator>(w->catalog, cfg.population, cfg.journal, w->ds.tau);
  w->rankings = std::make_unique<RankingCache>(w->scorer, w->catalog);
  return w;
}

}  // namespace esmr::oracle
