#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "racov/report.hpp"

using namespace racov;

namespace {

// Minimal XML well-formedness check: balanced tags, quoted attributes.
bool xml_well_formed(const std::string& doc) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while (i < doc.size()) {
    if (doc[i] != '<') {
      if (doc[i] == '>') return false;
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    bool in_quote = false;
    char quote = 0;
    while (end < doc.size() && (in_quote || doc[end] != '>')) {
      if (in_quote && doc[end] == quote) in_quote = false;
      else if (!in_quote && (doc[end] == '"' || doc[end] == '\'')) {
        in_quote = true;
        quote = doc[end];
      }
      ++end;
    }
    if (end >= doc.size()) return false;  // unterminated tag
    std::string tag = doc.substr(i + 1, end - i - 1);
    if (tag.empty()) return false;
    if (tag.front() == '?') {
      // declaration
    } else if (tag.front() == '/') {
      if (stack.empty()) return false;
      std::string name = tag.substr(1);
      if (stack.back() != name) return false;
      stack.pop_back();
    } else if (tag.back() == '/') {
      // self-closing
    } else {
      std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
      stack.push_back(name);
    }
    i = end + 1;
  }
  return stack.empty();
}

GroupSummary gs(const std::string& dataset, Condition cond, MatcherKind m,
                std::optional<double> support, std::optional<double> contradict,
                int n) {
  GroupSummary s;
  s.dataset = dataset;
  s.condition = cond;
  s.matcher = m;
  s.mean_support = support;
  s.mean_contradict = contradict;
  s.n = n;
  return s;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("coverage table renders 3-decimal cells in the paper layout") {
  std::vector<GroupSummary> summaries;
  const double support_match[3] = {0.515, 0.520, 0.613};
  const double support_mismatch[3] = {0.302, 0.302, 0.340};
  for (int m = 0; m < 3; ++m) {
    summaries.push_back(gs("wiki", Condition::match, static_cast<MatcherKind>(m),
                           support_match[m], 0.120, 50));
    summaries.push_back(gs("wiki", Condition::mismatch, static_cast<MatcherKind>(m),
                           support_mismatch[m], 0.211, 20));
  }

  std::string csv = coverage_table_csv(summaries);
  CHECK(csv.find("0.515") != std::string::npos);
  CHECK(csv.find("wiki,match") != std::string::npos);
  CHECK(csv.find("wiki,mismatch") != std::string::npos);

  std::string text = coverage_table_text(summaries);
  CHECK(text.find("0.515") != std::string::npos);
  CHECK(text.find("support_edit") != std::string::npos);
}

TEST_CASE("coverage table: empty input is header-only") {
  std::string csv = coverage_table_csv({});
  CHECK(count_occurrences(csv, "\n") == 1);
  CHECK(csv.rfind("dataset,condition,", 0) == 0);
}

TEST_CASE("coverage table: missing cells render as a dash") {
  std::vector<GroupSummary> summaries = {
      gs("d", Condition::match, MatcherKind::token, 0.5, std::nullopt, 10),
      gs("d", Condition::mismatch, MatcherKind::token, std::nullopt, 0.25, 10)};
  std::string csv = coverage_table_csv(summaries);
  CHECK(csv.find("—") != std::string::npos);
  CHECK(csv.find("0.500") != std::string::npos);
  CHECK(csv.find("0.250") != std::string::npos);
}

TEST_CASE("coverage table csv round-trips its values at 3 decimals") {
  std::vector<GroupSummary> summaries;
  for (int m = 0; m < 3; ++m) {
    summaries.push_back(gs("ds", Condition::match, static_cast<MatcherKind>(m),
                           0.123456 + m * 0.1, 0.654321 - m * 0.1, 9));
    summaries.push_back(gs("ds", Condition::mismatch, static_cast<MatcherKind>(m),
                           0.222222, 0.333333, 9));
  }
  std::string csv = coverage_table_csv(summaries);

  std::istringstream in(csv);
  std::string header, match_line, mismatch_line;
  std::getline(in, header);
  std::getline(in, match_line);
  std::getline(in, mismatch_line);

  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
  };
  auto mf = fields(match_line);
  REQUIRE(mf.size() == 8);
  CHECK(mf[0] == "ds");
  CHECK(mf[1] == "match");
  CHECK(std::stod(mf[2]) == doctest::Approx(0.123456).epsilon(1e-3));
  CHECK(std::stod(mf[3]) == doctest::Approx(0.223456).epsilon(1e-3));
  auto uf = fields(mismatch_line);
  CHECK(std::stod(uf[2]) == doctest::Approx(0.222222).epsilon(1e-3));
}

TEST_CASE("heatmap: 2x2 grid has four annotated cells and is well-formed") {
  ConfusionMatrix cm;
  cm.labels = {"A", "B"};
  cm.counts = {{3, 1}, {0, 2}};
  std::string svg = render_heatmap(cm);

  CHECK(count_occurrences(svg, "<rect") >= 5);  // 4 cells + background
  CHECK(svg.find(">3<") != std::string::npos);
  CHECK(svg.find(">1<") != std::string::npos);
  CHECK(svg.find(">0<") != std::string::npos);
  CHECK(svg.find(">2<") != std::string::npos);
  CHECK(xml_well_formed(svg));
}

TEST_CASE("heatmap: zero matrix renders a uniform valid grid") {
  ConfusionMatrix cm;
  cm.labels = {"A", "B", "C"};
  cm.counts = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  std::string svg = render_heatmap(cm);
  CHECK(xml_well_formed(svg));
  CHECK(count_occurrences(svg, "#ffffff") == 9);
}

TEST_CASE("heatmap escapes label text") {
  ConfusionMatrix cm;
  cm.labels = {"A&B", "C<D"};
  cm.counts = {{1, 0}, {0, 1}};
  std::string svg = render_heatmap(cm);
  CHECK(svg.find("A&amp;B") != std::string::npos);
  CHECK(svg.find("C&lt;D") != std::string::npos);
  CHECK(xml_well_formed(svg));
}

TEST_CASE("scatter: empty input still draws axes and legend") {
  std::string svg = render_scatter({});
  CHECK(xml_well_formed(svg));
  CHECK(svg.find("support coverage") != std::string::npos);
  CHECK(svg.find("contradiction coverage") != std::string::npos);
  CHECK(svg.find(">correct<") != std::string::npos);
  CHECK(svg.find(">incorrect<") != std::string::npos);
}

TEST_CASE("scatter: correct and incorrect points carry distinct classes") {
  std::vector<ScatterPoint> points = {
      ScatterPoint{"a", 0.5, 0.1, true, MatcherKind::token},
      ScatterPoint{"b", 0.3, 0.4, false, MatcherKind::token}};
  std::string svg = render_scatter(points, "demo");
  CHECK(count_occurrences(svg, "class=\"correct\"") == 1);
  CHECK(count_occurrences(svg, "class=\"incorrect\"") == 1);
  CHECK(xml_well_formed(svg));
}

TEST_CASE("scatter: byte-identical output for identical input") {
  std::vector<ScatterPoint> points = {
      ScatterPoint{"a", 0.25, 0.75, true, MatcherKind::exact},
      ScatterPoint{"b", 1.0, 0.0, false, MatcherKind::exact}};
  CHECK(render_scatter(points, "t") == render_scatter(points, "t"));
}

TEST_CASE("scatter_points omits records with absent coverage") {
  CoverageRecord with_both;
  with_both.instance_id = "a";
  with_both.matcher = MatcherKind::token;
  with_both.support_cov = 0.5;
  with_both.contradict_cov = 0.25;
  CoverageRecord missing_contra = with_both;
  missing_contra.instance_id = "b";
  missing_contra.contradict_cov.reset();
  CoverageRecord other_matcher = with_both;
  other_matcher.instance_id = "c";
  other_matcher.matcher = MatcherKind::exact;

  auto points = scatter_points({with_both, missing_contra, other_matcher},
                               MatcherKind::token);
  REQUIRE(points.size() == 1);
  CHECK(points[0].instance_id == "a");
}
