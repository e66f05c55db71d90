#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "racov/textnorm.hpp"

namespace racov {

enum class MatcherKind { token = 0, exact = 1, edit = 2 };

std::string_view matcher_name(MatcherKind m) noexcept;
std::optional<MatcherKind> matcher_from_name(std::string_view name) noexcept;

// Length-proportional edit-distance budget:
//   len < zero_below        -> 0
//   zero_below <= len < scale_from -> 1
//   len >= scale_from       -> floor(long_ratio * len)
struct EditPolicy {
  std::size_t zero_below = 4;
  std::size_t scale_from = 8;
  double long_ratio = 0.25;

  std::size_t threshold(std::size_t feature_len) const;
  void validate() const;  // monotone, and threshold(len) < len
};

struct MatchResult {
  std::string feature;
  MatcherKind matcher = MatcherKind::token;
  bool matched = false;
  std::optional<TokenSpan> evidence;  // span in the rationale, iff matched
  std::optional<int> distance;        // edit matcher only, iff matched
};

// Unit-cost insert/delete/substitute distance.
int levenshtein(std::string_view a, std::string_view b);

// Lemma-sequence containment: the feature's lemmas must appear as a
// contiguous run in the rationale's lemmas.
MatchResult match_token(std::string_view feature, const NormalizedText& rationale);

// Case-folded raw substring search.
MatchResult match_exact(std::string_view feature, std::string_view rationale_raw);

// Fuzzy containment: same-length lemma runs within the policy's edit budget.
MatchResult match_edit(std::string_view feature, const NormalizedText& rationale,
                       const EditPolicy& policy = {});

// Dispatch on matcher kind; `exact` matches against rationale.source.
MatchResult run_matcher(MatcherKind m, std::string_view feature,
                        const NormalizedText& rationale,
                        const EditPolicy& policy = {});

}  // namespace racov
