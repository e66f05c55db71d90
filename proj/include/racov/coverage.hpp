#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racov/featmodel.hpp"
#include "racov/llm.hpp"
#include "racov/matching.hpp"

namespace racov {

// Per-instance, per-matcher coverage. support_cov/contradict_cov are absent
// exactly when the corresponding feature subset is empty.
struct CoverageRecord {
  std::string instance_id;
  MatcherKind matcher = MatcherKind::token;
  std::optional<double> support_cov;
  std::optional<double> contradict_cov;
  int raw_count = 0;
  double proportion = 0.0;  // raw_count / k
  bool correct = false;     // LLM label == gold label
};

CoverageRecord coverage(const FeatureSet& fs, std::string_view rationale,
                        MatcherKind matcher, const EditPolicy& policy = {});

// coverage() plus the individual match outcomes, for audit dumps.
struct CoverageDetail {
  CoverageRecord record;
  std::vector<MatchResult> matches;  // supporting first, then contradicting
};
CoverageDetail coverage_detailed(const FeatureSet& fs, std::string_view rationale,
                                 MatcherKind matcher, const EditPolicy& policy = {});

struct BatchCoverageResult {
  std::vector<CoverageRecord> records;  // ordered by (instance id, matcher)
  int skipped_unmatched = 0;            // feature sets without an llm record
  int skipped_parse_failures = 0;       // llm records without a usable label
};

// Joins feature sets and llm records 1:1 on instance id and evaluates every
// enabled matcher. gold_by_id supplies the labels behind `correct`.
BatchCoverageResult batch_coverage(
    const std::vector<FeatureSet>& featuresets,
    const std::vector<LlmRecord>& llm_records,
    const std::unordered_map<std::string, std::string>& gold_by_id,
    const std::vector<MatcherKind>& matchers, const EditPolicy& policy = {});

void write_coverage_csv(const std::vector<CoverageRecord>& records,
                        const std::filesystem::path& path);
void write_coverage_jsonl(const std::vector<CoverageRecord>& records,
                          const std::filesystem::path& path);
std::vector<CoverageRecord> read_coverage_jsonl(const std::filesystem::path& path);

}  // namespace racov
