// On-disk datasets: one JSONL file per split plus a manifest whose content
// hash covers every record.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "slr/curriculum.hpp"
#include "slr/judge.hpp"

namespace slr {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One task as stored on disk and served over HTTP.
struct TaskRecord {
  std::string id;
  int level = 0;
  std::string tier;
  std::uint64_t seed = 0;
  std::string prompt_logic;
  std::string prompt_nl;
  std::string ground_truth_rule;
  /// Rendered background program, one fact per line.
  std::string background;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  nlohmann::json metadata = nlohmann::json::object();
  /// Stored only for tasks whose language is not the level preset.
  std::optional<Language> language;

  /// The record's language: `language` if set, else the level preset.
  Language task_language() const;
};

/// Level 0 when the task has no level; a non-preset language is kept.
TaskRecord to_record(const TaskInstance& task, std::string id);

nlohmann::json to_json(const TaskRecord& r);
/// Throws DatasetError on missing or mistyped fields.
TaskRecord record_from_json(const nlohmann::json& j);

/// Parses background and examples. Throws DatasetError on unparseable text.
JudgeTask judge_task(const TaskRecord& r);

/// "L07-test-0012".
std::string task_id(int level, Split split, std::size_t index);

struct DatasetManifest {
  std::uint64_t dataset_seed = 0;
  std::vector<int> levels;
  /// split -> level -> task count.
  std::map<std::string, std::map<int, int>> counts;
  /// Hex SHA-256 over the split files in train, eval, test order.
  std::string content_hash;
  /// Generation settings, informational.
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct Dataset {
  DatasetManifest manifest;
  std::vector<TaskRecord> train, eval, test;

  const std::vector<TaskRecord>& split(Split s) const;
  std::vector<TaskRecord>& split(Split s);
  /// nullptr when absent.
  const TaskRecord* find(const std::string& id) const;
};

/// The exact bytes of a split file: one compact JSON object per line.
std::string split_jsonl(const std::vector<TaskRecord>& records);
std::string content_hash(const Dataset& d);
std::string sha256_hex(std::string_view bytes);

/// Levels are built concurrently on up to `parallelism` threads; the result
/// does not depend on it.
Dataset build_dataset(const std::vector<LevelSpec>& specs, std::uint64_t dataset_seed, const BuildOptions& options = {},
                      int parallelism = 1);

/// Writes train.jsonl, eval.jsonl, test.jsonl and manifest.json.
void save_dataset(const Dataset& d, const std::filesystem::path& dir);
/// Throws DatasetError when files are missing, malformed, or the content
/// hash does not match the manifest.
Dataset load_dataset(const std::filesystem::path& dir);

/// Parses "1-5", "3", "1,4,7-9". Throws std::invalid_argument.
std::vector<int> parse_level_list(std::string_view text);

}  // namespace slr
