#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "racov/stats.hpp"

namespace racov {

struct ScatterPoint {
  std::string instance_id;
  double x = 0.0;  // support coverage
  double y = 0.0;  // contradiction coverage
  bool correct = false;
  MatcherKind matcher = MatcherKind::token;
};

// Records with either coverage absent are omitted.
std::vector<ScatterPoint> scatter_points(const std::vector<CoverageRecord>& records,
                                         MatcherKind matcher);

// Rows dataset x condition, columns metric x matcher, 3 decimals, missing
// cells rendered as an em dash.
std::string coverage_table_text(const std::vector<GroupSummary>& summaries);
std::string coverage_table_csv(const std::vector<GroupSummary>& summaries);

std::string bootstrap_table_csv(const std::vector<BootstrapResult>& results,
                                std::string_view dataset);

// Standalone SVG documents; byte-identical for identical input.
std::string render_heatmap(const ConfusionMatrix& cm, std::string_view title = "");
std::string render_scatter(const std::vector<ScatterPoint>& points,
                           std::string_view title = "");

}  // namespace racov
