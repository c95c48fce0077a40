#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esmr/affect.hpp"
#include "esmr/catalog.hpp"
#include "esmr/journal.hpp"
#include "esmr/policy.hpp"
#include "esmr/population.hpp"

namespace esmr {

struct CausalConfig {
  double prune_threshold = 0.05;
};

struct PolicyConfig {
  ScorerConfig scorer;
  AgentConfig agent;
};

struct BenchConfig {
  // Subset of full, emotion_off, engagement_off, scorer_only, run in this order.
  std::vector<std::string> variants = {"full", "emotion_off", "engagement_off", "scorer_only"};
};

struct RunConfig {
  CatalogConfig catalog;
  PopulationConfig population;
  JournalConfig journal;
  AffectConfig affect;
  CausalConfig causal;
  PolicyConfig policy;
  BenchConfig bench;
  std::uint64_t seed = 42;
  std::string output_dir = "runs";
};

/// Every key with its current value, sections in a fixed order.
std::string config_to_json(const RunConfig& cfg, int indent = 2);

/// Overlays `text` on the defaults. Unknown keys, type mismatches and values
/// outside their domain raise ConfigError naming the dotted key.
RunConfig config_from_json(const std::string& text);

/// Range checks shared by the loader and programmatic callers.
void validate_config(const RunConfig& cfg);

/// 50 users, 100 videos, 10 days.
void apply_smoke(RunConfig& cfg);

/// SHA-256 of the canonical dump with seed and output_dir left out, so the
/// hash names the experiment rather than where or with which seed it ran.
std::string config_hash(const RunConfig& cfg);

}  // namespace esmr
