#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "racov/corpus.hpp"
#include "racov/featmodel.hpp"
#include "racov/matching.hpp"

namespace racov {

// One structured config file drives every pipeline stage. Relative paths are
// resolved against the config file's directory at load time; the copy frozen
// into the run directory carries resolved paths so stages can be rerun from
// the run directory alone.
struct RunConfig {
  // dataset
  std::filesystem::path dataset_path;
  DatasetFormat dataset_format = DatasetFormat::jsonl;
  std::optional<std::filesystem::path> labels_manifest;

  // split
  double train_fraction = 0.8;
  std::uint64_t split_seed = 7;

  // vectorizer
  VectorizerConfig vectorizer;
  std::optional<std::filesystem::path> stopword_file;

  // reference model
  LrConfig lr;

  // feature extraction
  int k = 5;
  enum class ClassSource { lr, llm };
  ClassSource class_source = ClassSource::lr;

  // matching
  std::vector<MatcherKind> matchers{MatcherKind::token, MatcherKind::exact,
                                    MatcherKind::edit};
  EditPolicy edit_policy;

  // annotation
  enum class LlmMode { replay, live };
  LlmMode llm_mode = LlmMode::replay;
  std::optional<std::filesystem::path> replay_path;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::string api_key_env = "RACOV_API_KEY";
  std::optional<std::string> prompt_template;
  double temperature = 0.0;
  std::optional<std::filesystem::path> cache_dir;
  bool offline = false;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  int min_request_interval_ms = 0;
  int timeout_s = 60;

  // bootstrap
  int n_resamples = 10000;
  std::uint64_t bootstrap_seed = 20240817;

  // evaluation extras
  bool audit = false;

  void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace racov
