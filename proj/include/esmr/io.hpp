#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "esmr/affect.hpp"
#include "esmr/catalog.hpp"
#include "esmr/journal.hpp"
#include "esmr/population.hpp"

namespace esmr {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Throws MissingArtifactError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so a crash never leaves a
/// truncated artifact behind.
void write_file(const std::filesystem::path& path, std::string_view data);

std::string catalog_csv(const Catalog& catalog);
std::string catalog_jsonl(const Catalog& catalog);
Catalog catalog_from_jsonl(const std::string& text);

std::string users_csv(const std::vector<UserProfile>& users);
std::string users_jsonl(const std::vector<UserProfile>& users);
std::vector<UserProfile> users_from_jsonl(const std::string& text);

/// Flat per-day summary; the JSONL mirror also carries the watched and
/// skipped video lists and is the form read back by later stages.
std::string records_csv(const std::vector<DailyRecord>& records);
std::string records_jsonl(const std::vector<DailyRecord>& records);
std::vector<DailyRecord> records_from_jsonl(const std::string& text);

std::string features_csv(const std::vector<FeatureRow>& rows);
std::string features_jsonl(const std::vector<FeatureRow>& rows);

/// Feature rows rebuilt from records, exactly as the simulator emitted them.
std::vector<FeatureRow> rebuild_features(const std::vector<DailyRecord>& records,
                                         const std::vector<UserProfile>& users);
/// Fills the label-derived columns and the records' dominant emotion from
/// `labels` (aligned with the records), as labeling does.
void attach_labels(Dataset& ds, const std::vector<DayLabel>& labels);

std::string labels_csv(const std::vector<DayLabel>& labels);
std::vector<DayLabel> labels_from_csv(const std::string& text);

std::string confusion_csv(const ConfusionMatrix& m);
std::string elbow_csv(const std::vector<double>& inertia, int k_min);

}  // namespace esmr
