#pragma once

#include <filesystem>
#include <iosfwd>

#include "racov/config.hpp"

namespace racov {

// Run-directory artifact names shared by the stages.
namespace runfiles {
inline constexpr const char* config = "config.json";
inline constexpr const char* model = "model.json";
inline constexpr const char* split = "split.json";
inline constexpr const char* records = "records.jsonl";
inline constexpr const char* coverage_csv = "coverage.csv";
inline constexpr const char* coverage_jsonl = "coverage.jsonl";
inline constexpr const char* summary = "summary.json";
inline constexpr const char* audit = "audit.jsonl";
}  // namespace runfiles

// Stage 1-2: load + split the dataset, fit the reference model, freeze the
// config, write model archive and split manifest. Prints eval accuracy.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& run_dir,
               std::ostream& log);

// Stage 3 (collection): produce one llm record per eval instance, from the
// replay file or the live endpoint (cache first).
void cmd_annotate(const RunConfig& cfg, const std::filesystem::path& run_dir,
                  std::ostream& log);

// Stage 3-5: features, matching, coverage, aggregation, bootstrap, confusion.
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& run_dir,
                  std::ostream& log);

// Rendering: tables/*.csv|txt and figures/*.svg from evaluate outputs.
void cmd_report(const std::filesystem::path& run_dir, std::ostream& log);

void cmd_all(const RunConfig& cfg, const std::filesystem::path& run_dir,
             std::ostream& log);

// Loads the frozen config from a run directory.
RunConfig run_dir_config(const std::filesystem::path& run_dir);

}  // namespace racov
