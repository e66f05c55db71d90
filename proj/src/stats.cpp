#include "racov/stats.hpp"

#include <algorithm>
#include <cmath>

#include "racov/error.hpp"
#include "racov/rng.hpp"

namespace racov {

std::string_view condition_name(Condition c) noexcept {
  return c == Condition::match ? "match" : "mismatch";
}

std::pair<std::vector<CoverageRecord>, std::vector<CoverageRecord>> partition(
    const std::vector<CoverageRecord>& records) {
  std::pair<std::vector<CoverageRecord>, std::vector<CoverageRecord>> out;
  for (const auto& r : records) (r.correct ? out.first : out.second).push_back(r);
  return out;
}

namespace {

const std::optional<double>& field_of(const CoverageRecord& r, CovField f) {
  return f == CovField::support ? r.support_cov : r.contradict_cov;
}

std::vector<double> present_values(const std::vector<CoverageRecord>& group,
                                   CovField f) {
  std::vector<double> values;
  for (const auto& r : group)
    if (const auto& v = field_of(r, f)) values.push_back(*v);
  return values;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

MeanResult group_mean(const std::vector<CoverageRecord>& group, CovField field) {
  MeanResult out;
  double sum = 0.0;
  for (const auto& r : group) {
    if (const auto& v = field_of(r, field)) {
      sum += *v;
      ++out.n_used;
    } else {
      ++out.n_absent;
    }
  }
  if (out.n_used > 0) out.mean = sum / out.n_used;
  return out;
}

GroupSummary summarize_group(const std::vector<CoverageRecord>& group,
                             const std::string& dataset, Condition condition,
                             MatcherKind matcher) {
  GroupSummary s;
  s.dataset = dataset;
  s.condition = condition;
  s.matcher = matcher;
  s.n = static_cast<int>(group.size());
  auto support = group_mean(group, CovField::support);
  auto contradict = group_mean(group, CovField::contradict);
  s.mean_support = support.mean;
  s.mean_contradict = contradict.mean;
  s.n_absent_support = support.n_absent;
  s.n_absent_contradict = contradict.n_absent;
  return s;
}

double sorted_quantile(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty())
    throw Error(ErrorKind::insufficient_data, "quantile of an empty sample");
  if (sorted_values.size() == 1) return sorted_values.front();
  double h = p * static_cast<double>(sorted_values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted_values.size() - 1);
  double frac = h - std::floor(h);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

namespace {

BootstrapResult finish_result(std::string statistic, MatcherKind matcher,
                              double point, std::vector<double> stats,
                              int n_resamples, std::uint64_t seed) {
  std::size_t positive = 0;
  for (double s : stats)
    if (s > 0.0) ++positive;
  std::sort(stats.begin(), stats.end());

  BootstrapResult out;
  out.statistic = std::move(statistic);
  out.matcher = matcher;
  out.point_estimate = point;
  out.ci_low = sorted_quantile(stats, 0.025);
  out.ci_high = sorted_quantile(stats, 0.975);
  out.n_resamples = n_resamples;
  out.seed = seed;
  out.significant = out.ci_low > 0.0 || out.ci_high < 0.0;
  out.side_proportion = static_cast<double>(positive) / static_cast<double>(stats.size());
  return out;
}

MatcherKind group_matcher(const std::vector<CoverageRecord>& a,
                          const std::vector<CoverageRecord>& b) {
  if (!a.empty()) return a.front().matcher;
  if (!b.empty()) return b.front().matcher;
  return MatcherKind::token;
}

void check_resamples(int n_resamples) {
  if (n_resamples < 1000)
    throw Error(ErrorKind::config, "bootstrap needs n_resamples >= 1000");
}

}  // namespace

BootstrapResult bootstrap_delta(const std::vector<CoverageRecord>& match_group,
                                const std::vector<CoverageRecord>& mismatch_group,
                                CovField field, int n_resamples, std::uint64_t seed) {
  check_resamples(n_resamples);
  const auto mv = present_values(match_group, field);
  const auto uv = present_values(mismatch_group, field);
  if (mv.empty() || uv.empty())
    throw Error(ErrorKind::insufficient_data,
                "bootstrap_delta: a group is empty after absent-value exclusion");

  const double point = mean_of(mv) - mean_of(uv);
  std::vector<double> stats(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    double ms = 0.0;
    for (std::size_t i = 0; i < mv.size(); ++i) ms += mv[rng.below(mv.size())];
    double us = 0.0;
    for (std::size_t i = 0; i < uv.size(); ++i) us += uv[rng.below(uv.size())];
    stats[static_cast<std::size_t>(r)] =
        ms / static_cast<double>(mv.size()) - us / static_cast<double>(uv.size());
  }
  return finish_result(field == CovField::support ? "delta_support" : "delta_contradict",
                       group_matcher(match_group, mismatch_group), point,
                       std::move(stats), n_resamples, seed);
}

BootstrapResult bootstrap_asymmetry(const std::vector<CoverageRecord>& match_group,
                                    const std::vector<CoverageRecord>& mismatch_group,
                                    int n_resamples, std::uint64_t seed) {
  check_resamples(n_resamples);
  for (CovField f : {CovField::support, CovField::contradict}) {
    if (present_values(match_group, f).empty() ||
        present_values(mismatch_group, f).empty())
      throw Error(ErrorKind::insufficient_data,
                  "bootstrap_asymmetry: a group is empty after absent-value exclusion");
  }

  const auto group_delta = [](const std::vector<const CoverageRecord*>& match,
                              const std::vector<const CoverageRecord*>& mismatch,
                              CovField f) -> std::optional<double> {
    double ms = 0.0, us = 0.0;
    int mn = 0, un = 0;
    for (const auto* r : match)
      if (const auto& v = field_of(*r, f)) {
        ms += *v;
        ++mn;
      }
    for (const auto* r : mismatch)
      if (const auto& v = field_of(*r, f)) {
        us += *v;
        ++un;
      }
    if (mn == 0 || un == 0) return std::nullopt;
    return ms / mn - us / un;
  };

  const double point_support =
      *group_mean(match_group, CovField::support).mean -
      *group_mean(mismatch_group, CovField::support).mean;
  const double point_contradict =
      *group_mean(match_group, CovField::contradict).mean -
      *group_mean(mismatch_group, CovField::contradict).mean;
  const double point = point_support - point_contradict;

  // Resample whole records so support and contradict stay paired. Resamples
  // that lose every present value of a field in a group carry no statistic
  // and are dropped.
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), 1));
    std::vector<const CoverageRecord*> rm(match_group.size());
    for (auto& p : rm) p = &match_group[rng.below(match_group.size())];
    std::vector<const CoverageRecord*> ru(mismatch_group.size());
    for (auto& p : ru) p = &mismatch_group[rng.below(mismatch_group.size())];
    auto ds = group_delta(rm, ru, CovField::support);
    auto dc = group_delta(rm, ru, CovField::contradict);
    if (ds && dc) stats.push_back(*ds - *dc);
  }
  if (stats.empty())
    throw Error(ErrorKind::insufficient_data,
                "bootstrap_asymmetry: every resample lost a field entirely");
  return finish_result("delta_star", group_matcher(match_group, mismatch_group),
                       point, std::move(stats), n_resamples, seed);
}

int ConfusionMatrix::total() const {
  int sum = 0;
  for (const auto& row : counts)
    for (int c : row) sum += c;
  return sum;
}

double ConfusionMatrix::accuracy() const {
  int t = total();
  if (t == 0) return 0.0;
  int trace = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) trace += counts[i][i];
  return static_cast<double>(trace) / static_cast<double>(t);
}

ConfusionMatrix confusion(const std::vector<std::pair<std::string, std::string>>& gold_pred,
                          const std::vector<std::string>& label_order) {
  ConfusionMatrix cm;
  cm.labels = label_order;
  cm.counts.assign(label_order.size(), std::vector<int>(label_order.size(), 0));
  auto index_of = [&](const std::string& label) {
    for (std::size_t i = 0; i < label_order.size(); ++i)
      if (label_order[i] == label) return static_cast<int>(i);
    return -1;
  };
  for (const auto& [gold, pred] : gold_pred) {
    int g = index_of(gold), p = index_of(pred);
    if (g < 0 || p < 0)
      throw Error(ErrorKind::data,
                  "confusion: label outside the label order: " +
                      (g < 0 ? gold : pred));
    ++cm.counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
  }
  return cm;
}

}  // namespace racov
