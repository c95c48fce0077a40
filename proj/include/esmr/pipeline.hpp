#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "esmr/config.hpp"

namespace esmr {

inline constexpr std::string_view kVersion = "1.0.0";

/// Stage names in dependency order.
inline constexpr std::array<std::string_view, 7> kStages = {
    "simulate", "label", "discover", "train-scorer", "train-agent", "evaluate", "ablate"};

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // inputs and outputs matched the manifest
  double seconds = 0.0;
};

/// One run directory, `<root>/<hash12>-seed<seed>`, holding every artifact
/// and a manifest that records per-stage input and output hashes.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path root, bool force = false, int threads = 1);

  const std::filesystem::path& run_dir() const { return dir_; }
  std::string run_id() const;
  const RunConfig& config() const { return config_; }

  /// Runs one stage, or every stage for "all". Throws MissingArtifactError
  /// naming the subcommand that produces a missing input.
  std::vector<StageOutcome> run(std::string_view stage);

 private:
  StageOutcome run_stage(std::string_view stage);

  RunConfig config_;
  std::string hash_;
  std::filesystem::path dir_;
  bool force_;
  int threads_;
};

/// Artifacts each stage writes, relative to the run directory.
const std::vector<std::string>& stage_outputs(std::string_view stage);
/// Artifacts each stage reads.
const std::vector<std::string>& stage_inputs(std::string_view stage);

}  // namespace esmr
