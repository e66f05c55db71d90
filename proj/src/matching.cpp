#include "racov/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "racov/error.hpp"

namespace racov {

std::string_view matcher_name(MatcherKind m) noexcept {
  switch (m) {
    case MatcherKind::token: return "token";
    case MatcherKind::exact: return "exact";
    case MatcherKind::edit: return "edit";
  }
  return "?";
}

std::optional<MatcherKind> matcher_from_name(std::string_view name) noexcept {
  if (name == "token") return MatcherKind::token;
  if (name == "exact") return MatcherKind::exact;
  if (name == "edit") return MatcherKind::edit;
  return std::nullopt;
}

std::size_t EditPolicy::threshold(std::size_t feature_len) const {
  if (feature_len < zero_below) return 0;
  if (feature_len < scale_from) return 1;
  return static_cast<std::size_t>(
      std::floor(long_ratio * static_cast<double>(feature_len)));
}

void EditPolicy::validate() const {
  if (zero_below < 2 || scale_from <= zero_below)
    throw Error(ErrorKind::config,
                "edit policy bands must satisfy 2 <= zero_below < scale_from");
  if (!(long_ratio >= 0.0 && long_ratio < 1.0))
    throw Error(ErrorKind::config, "edit policy ratio must lie in [0,1)");
  if (threshold(scale_from) < 1)
    throw Error(ErrorKind::config,
                "edit policy is not monotone: threshold drops below 1 at scale_from");
}

int levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return static_cast<int>(n);

  std::vector<int> row(m + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t j = 1; j <= n; ++j) {
    int diag = row[0];
    row[0] = static_cast<int>(j);
    for (std::size_t i = 1; i <= m; ++i) {
      int sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      diag = row[i];
      row[i] = std::min({row[i] + 1, row[i - 1] + 1, sub});
    }
  }
  return row[m];
}

namespace {

std::vector<std::string> feature_lemmas(std::string_view feature) {
  std::vector<std::string> lemmas;
  for (const auto& [token, span] : tokenize(feature))
    lemmas.push_back(lemmatize(token));
  return lemmas;
}

TokenSpan run_span(const NormalizedText& rationale, std::size_t first,
                   std::size_t count) {
  return TokenSpan{rationale.offsets[first].begin,
                   rationale.offsets[first + count - 1].end};
}

char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

MatchResult match_token(std::string_view feature, const NormalizedText& rationale) {
  MatchResult res;
  res.feature.assign(feature);
  res.matcher = MatcherKind::token;

  const auto needle = feature_lemmas(feature);
  if (needle.empty() || rationale.lemmas.size() < needle.size()) return res;

  for (std::size_t i = 0; i + needle.size() <= rationale.lemmas.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < needle.size(); ++k)
      if (rationale.lemmas[i + k] != needle[k]) {
        hit = false;
        break;
      }
    if (hit) {
      res.matched = true;
      res.evidence = run_span(rationale, i, needle.size());
      return res;
    }
  }
  return res;
}

MatchResult match_exact(std::string_view feature, std::string_view rationale_raw) {
  MatchResult res;
  res.feature.assign(feature);
  res.matcher = MatcherKind::exact;
  if (feature.empty() || feature.size() > rationale_raw.size()) return res;

  for (std::size_t i = 0; i + feature.size() <= rationale_raw.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < feature.size(); ++k)
      if (fold(rationale_raw[i + k]) != fold(feature[k])) {
        hit = false;
        break;
      }
    if (hit) {
      res.matched = true;
      res.evidence = TokenSpan{i, i + feature.size()};
      return res;
    }
  }
  return res;
}

MatchResult match_edit(std::string_view feature, const NormalizedText& rationale,
                       const EditPolicy& policy) {
  MatchResult res;
  res.feature.assign(feature);
  res.matcher = MatcherKind::edit;

  const auto needle = feature_lemmas(feature);
  if (needle.empty() || rationale.lemmas.size() < needle.size()) return res;

  const std::string joined = join_lemmas(needle);
  const std::size_t budget = policy.threshold(feature.size());

  int best = -1;
  std::size_t best_at = 0;
  for (std::size_t i = 0; i + needle.size() <= rationale.lemmas.size(); ++i) {
    std::string candidate = rationale.lemmas[i];
    for (std::size_t k = 1; k < needle.size(); ++k) {
      candidate.push_back(' ');
      candidate += rationale.lemmas[i + k];
    }
    int d = levenshtein(joined, candidate);
    if (best < 0 || d < best) {
      best = d;
      best_at = i;
      if (best == 0) break;  // cannot improve; earliest zero kept
    }
  }
  if (best >= 0 && static_cast<std::size_t>(best) <= budget) {
    res.matched = true;
    res.distance = best;
    res.evidence = run_span(rationale, best_at, needle.size());
  }
  return res;
}

MatchResult run_matcher(MatcherKind m, std::string_view feature,
                        const NormalizedText& rationale, const EditPolicy& policy) {
  switch (m) {
    case MatcherKind::token: return match_token(feature, rationale);
    case MatcherKind::exact: return match_exact(feature, rationale.source);
    case MatcherKind::edit: return match_edit(feature, rationale, policy);
  }
  throw Error(ErrorKind::config, "unknown matcher kind");
}

}  // namespace racov
