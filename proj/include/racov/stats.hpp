#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "racov/coverage.hpp"

namespace racov {

enum class Condition { match, mismatch };

std::string_view condition_name(Condition c) noexcept;

enum class CovField { support, contradict };

struct GroupSummary {
  std::string dataset;
  Condition condition = Condition::match;
  MatcherKind matcher = MatcherKind::token;
  std::optional<double> mean_support;
  std::optional<double> mean_contradict;
  int n = 0;
  int n_absent_support = 0;
  int n_absent_contradict = 0;
};

// Splits on the `correct` flag: (match, mismatch). Exhaustive and stable.
std::pair<std::vector<CoverageRecord>, std::vector<CoverageRecord>> partition(
    const std::vector<CoverageRecord>& records);

struct MeanResult {
  std::optional<double> mean;  // absent when no usable values
  int n_used = 0;
  int n_absent = 0;
};

MeanResult group_mean(const std::vector<CoverageRecord>& group, CovField field);

GroupSummary summarize_group(const std::vector<CoverageRecord>& group,
                             const std::string& dataset, Condition condition,
                             MatcherKind matcher);

struct BootstrapResult {
  std::string statistic;  // delta_support | delta_contradict | delta_star
  MatcherKind matcher = MatcherKind::token;
  double point_estimate = 0.0;
  double ci_low = 0.0;   // 2.5th percentile
  double ci_high = 0.0;  // 97.5th percentile
  int n_resamples = 0;
  std::uint64_t seed = 0;
  bool significant = false;      // 0 outside [ci_low, ci_high]
  double side_proportion = 0.0;  // fraction of resamples with statistic > 0
};

// Percentile bootstrap of delta = mean(match) - mean(mismatch) over one
// coverage field. Groups are resampled independently, each at its own size,
// over the records whose field is present.
BootstrapResult bootstrap_delta(const std::vector<CoverageRecord>& match_group,
                                const std::vector<CoverageRecord>& mismatch_group,
                                CovField field, int n_resamples, std::uint64_t seed);

// delta_star = delta_support - delta_contradict, both deltas computed from
// the same resampled instances so the within-instance pairing is kept.
BootstrapResult bootstrap_asymmetry(const std::vector<CoverageRecord>& match_group,
                                    const std::vector<CoverageRecord>& mismatch_group,
                                    int n_resamples, std::uint64_t seed);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> counts;  // [true][predicted]

  int total() const;
  double accuracy() const;  // trace / total
};

// gold_pred: (gold label, predicted label) per parsed instance.
ConfusionMatrix confusion(const std::vector<std::pair<std::string, std::string>>& gold_pred,
                          const std::vector<std::string>& label_order);

// Linear-interpolation empirical quantile over a sorted vector, p in [0,1].
double sorted_quantile(const std::vector<double>& sorted_values, double p);

}  // namespace racov
