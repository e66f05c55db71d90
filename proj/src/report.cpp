#include "racov/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace racov {

namespace {

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string cell(const std::optional<double>& v) {
  return v ? fmt(*v, 3) : std::string("—");
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr MatcherKind kMatcherOrder[] = {MatcherKind::token, MatcherKind::exact,
                                         MatcherKind::edit};

struct TableRow {
  std::string dataset;
  Condition condition;
  std::optional<double> support[3];
  std::optional<double> contradict[3];
};

std::vector<TableRow> pivot(const std::vector<GroupSummary>& summaries) {
  std::vector<TableRow> rows;
  auto row_for = [&](const std::string& dataset, Condition cond) -> TableRow& {
    for (auto& r : rows)
      if (r.dataset == dataset && r.condition == cond) return r;
    rows.push_back(TableRow{dataset, cond, {}, {}});
    return rows.back();
  };
  // Keep dataset first-appearance order; list match before mismatch.
  for (const auto& s : summaries) row_for(s.dataset, Condition::match);
  std::vector<TableRow> ordered;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ordered.push_back(rows[i]);
    ordered.push_back(TableRow{rows[i].dataset, Condition::mismatch, {}, {}});
  }
  rows = std::move(ordered);
  for (const auto& s : summaries) {
    TableRow& r = row_for(s.dataset, s.condition);
    auto mi = static_cast<std::size_t>(s.matcher);
    r.support[mi] = s.mean_support;
    r.contradict[mi] = s.mean_contradict;
  }
  return rows;
}

const char* kColumnNames[] = {"support_token",    "support_exact",
                              "support_edit",     "contradict_token",
                              "contradict_exact", "contradict_edit"};

}  // namespace

std::vector<ScatterPoint> scatter_points(const std::vector<CoverageRecord>& records,
                                         MatcherKind matcher) {
  std::vector<ScatterPoint> points;
  for (const auto& r : records) {
    if (r.matcher != matcher) continue;
    if (!r.support_cov || !r.contradict_cov) continue;
    points.push_back(
        ScatterPoint{r.instance_id, *r.support_cov, *r.contradict_cov, r.correct, matcher});
  }
  return points;
}

std::string coverage_table_csv(const std::vector<GroupSummary>& summaries) {
  std::string out = "dataset,condition";
  for (const char* c : kColumnNames) {
    out += ',';
    out += c;
  }
  out += '\n';
  for (const auto& r : pivot(summaries)) {
    out += r.dataset;
    out += ',';
    out += condition_name(r.condition);
    for (std::size_t m = 0; m < 3; ++m) {
      out += ',';
      out += cell(r.support[m]);
    }
    for (std::size_t m = 0; m < 3; ++m) {
      out += ',';
      out += cell(r.contradict[m]);
    }
    out += '\n';
  }
  return out;
}

std::string coverage_table_text(const std::vector<GroupSummary>& summaries) {
  const auto rows = pivot(summaries);
  std::size_t name_w = 7;  // "dataset"
  for (const auto& r : rows) name_w = std::max(name_w, r.dataset.size());

  auto pad = [](std::string s, std::size_t w) {
    while (s.size() < w) s.push_back(' ');
    return s;
  };
  // The em dash cell is 3 bytes but 1 column; pad by display width.
  auto pad_cell = [&](const std::string& s, std::size_t w) {
    std::string out = s;
    std::size_t display = s == "—" ? 1 : s.size();
    while (display < w) {
      out.push_back(' ');
      ++display;
    }
    return out;
  };

  std::string out = pad("dataset", name_w + 2) + pad("condition", 11);
  for (const char* c : kColumnNames) out += pad(c, 18);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  out += '\n';
  for (const auto& r : rows) {
    out += pad(r.dataset, name_w + 2);
    out += pad(std::string(condition_name(r.condition)), 11);
    for (std::size_t m = 0; m < 3; ++m) out += pad_cell(cell(r.support[m]), 18);
    for (std::size_t m = 0; m < 3; ++m) out += pad_cell(cell(r.contradict[m]), 18);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

std::string bootstrap_table_csv(const std::vector<BootstrapResult>& results,
                                std::string_view dataset) {
  std::string out =
      "dataset,statistic,matcher,point_estimate,ci_low,ci_high,significant,"
      "side_proportion,n_resamples,seed\n";
  for (const auto& r : results) {
    out += std::string(dataset) + ',' + r.statistic + ',' +
           std::string(matcher_name(r.matcher)) + ',' + fmt(r.point_estimate, 6) +
           ',' + fmt(r.ci_low, 6) + ',' + fmt(r.ci_high, 6) + ',' +
           (r.significant ? "true" : "false") + ',' + fmt(r.side_proportion, 6) +
           ',' + std::to_string(r.n_resamples) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

namespace {

std::string heat_color(double intensity) {
  // white -> dark blue ramp
  const auto lerp = [&](int a, int b) {
    return static_cast<int>(a + (b - a) * intensity + 0.5);
  };
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", lerp(255, 8), lerp(255, 48),
                lerp(255, 107));
  return buf;
}

std::string shorten(const std::string& s, std::size_t n) {
  if (s.size() <= n) return s;
  return s.substr(0, n - 1) + ".";
}

}  // namespace

std::string render_heatmap(const ConfusionMatrix& cm, std::string_view title) {
  const std::size_t n = cm.labels.size();
  const int cell_px = 44;
  const int left = 96, top = 48, bottom = 72;
  const int width = left + cell_px * static_cast<int>(n) + 24;
  const int height = top + cell_px * static_cast<int>(n) + bottom;

  int max_count = 1;
  for (const auto& row : cm.counts)
    for (int c : row) max_count = std::max(max_count, c);

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string heading = title.empty() ? "Confusion matrix (LLM vs gold)"
                                      : std::string(title);
  svg += "<text x=\"" + std::to_string(width / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(heading) + "</text>\n";

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int count = cm.counts[i][j];
      const double intensity =
          max_count > 0 ? static_cast<double>(count) / max_count : 0.0;
      const int x = left + static_cast<int>(j) * cell_px;
      const int y = top + static_cast<int>(i) * cell_px;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell_px) + "\" height=\"" +
             std::to_string(cell_px) + "\" fill=\"" + heat_color(intensity) +
             "\" stroke=\"#cccccc\"/>\n";
      svg += "<text x=\"" + std::to_string(x + cell_px / 2) + "\" y=\"" +
             std::to_string(y + cell_px / 2 + 5) +
             "\" text-anchor=\"middle\" font-size=\"13\" fill=\"" +
             (intensity > 0.6 ? "white" : "#222222") + "\">" +
             std::to_string(count) + "</text>\n";
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" +
           std::to_string(top + static_cast<int>(i) * cell_px + cell_px / 2 + 4) +
           "\" text-anchor=\"end\" font-size=\"12\">" +
           xml_escape(shorten(cm.labels[i], 12)) + "</text>\n";
    svg += "<text x=\"" +
           std::to_string(left + static_cast<int>(i) * cell_px + cell_px / 2) +
           "\" y=\"" + std::to_string(top + cell_px * static_cast<int>(n) + 18) +
           "\" text-anchor=\"middle\" font-size=\"12\">" +
           xml_escape(shorten(cm.labels[i], 12)) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(left + cell_px * static_cast<int>(n) / 2) +
         "\" y=\"" + std::to_string(height - 20) +
         "\" text-anchor=\"middle\" font-size=\"13\">predicted</text>\n";
  svg += "<text x=\"20\" y=\"" +
         std::to_string(top + cell_px * static_cast<int>(n) / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " +
         std::to_string(top + cell_px * static_cast<int>(n) / 2) +
         ")\">gold</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string render_scatter(const std::vector<ScatterPoint>& points,
                           std::string_view title) {
  const int size = 420, left = 64, top = 48, bottom = 56, right = 24;
  const int width = left + size + right;
  const int height = top + size + bottom;

  auto px = [&](double v) { return fmt(left + v * size, 1); };
  auto py = [&](double v) { return fmt(top + (1.0 - v) * size, 1); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg += "<text x=\"" + std::to_string(width / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           xml_escape(title) + "</text>\n";

  svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top) +
         "\" width=\"" + std::to_string(size) + "\" height=\"" + std::to_string(size) +
         "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg += "<line x1=\"" + px(v) + "\" y1=\"" + std::to_string(top + size) +
           "\" x2=\"" + px(v) + "\" y2=\"" + std::to_string(top + size + 5) +
           "\" stroke=\"#444444\"/>\n";
    svg += "<text x=\"" + px(v) + "\" y=\"" + std::to_string(top + size + 20) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + fmt(v, 2) + "</text>\n";
    svg += "<line x1=\"" + std::to_string(left - 5) + "\" y1=\"" + py(v) +
           "\" x2=\"" + std::to_string(left) + "\" y2=\"" + py(v) +
           "\" stroke=\"#444444\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + py(v) +
           "\" text-anchor=\"end\" dominant-baseline=\"middle\" font-size=\"11\">" +
           fmt(v, 2) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(left + size / 2) + "\" y=\"" +
         std::to_string(height - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\">support coverage</text>\n";
  svg += "<text x=\"18\" y=\"" + std::to_string(top + size / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
         std::to_string(top + size / 2) +
         ")\">contradiction coverage</text>\n";

  for (const auto& p : points) {
    if (p.correct) {
      svg += "<circle class=\"correct\" cx=\"" + px(p.x) + "\" cy=\"" + py(p.y) +
             "\" r=\"5\" fill=\"#2166ac\" fill-opacity=\"0.75\"/>\n";
    } else {
      svg += "<rect class=\"incorrect\" x=\"" + fmt(left + p.x * size - 4.5, 1) +
             "\" y=\"" + fmt(top + (1.0 - p.y) * size - 4.5, 1) +
             "\" width=\"9\" height=\"9\" fill=\"#b2182b\" fill-opacity=\"0.75\"/>\n";
    }
  }

  // legend
  const int lx = left + size - 132, ly = top + 10;
  svg += "<rect x=\"" + std::to_string(lx - 10) + "\" y=\"" + std::to_string(ly - 14) +
         "\" width=\"142\" height=\"44\" fill=\"white\" stroke=\"#999999\"/>\n";
  svg += "<circle cx=\"" + std::to_string(lx) + "\" cy=\"" + std::to_string(ly) +
         "\" r=\"5\" fill=\"#2166ac\" fill-opacity=\"0.75\"/>\n";
  svg += "<text x=\"" + std::to_string(lx + 12) + "\" y=\"" + std::to_string(ly + 4) +
         "\" font-size=\"12\">correct</text>\n";
  svg += "<rect x=\"" + std::to_string(lx - 4) + "\" y=\"" + std::to_string(ly + 12) +
         "\" width=\"9\" height=\"9\" fill=\"#b2182b\" fill-opacity=\"0.75\"/>\n";
  svg += "<text x=\"" + std::to_string(lx + 12) + "\" y=\"" + std::to_string(ly + 21) +
         "\" font-size=\"12\">incorrect</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace racov
