#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace racov {

// Byte span [begin, end) into the source string.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// Tokens, their lemmas, and their source spans. The three vectors are
// parallel; spans are non-overlapping and strictly increasing.
struct NormalizedText {
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::vector<TokenSpan> offsets;
  std::string source;

  std::size_t size() const noexcept { return tokens.size(); }
};

// Maximal runs of letters/digits; apostrophes survive only word-internally.
std::vector<std::pair<std::string, TokenSpan>> tokenize(std::string_view text);

// Lowercase + rule-table suffix reduction. Deterministic and idempotent;
// the result never contains apostrophes.
std::string lemmatize(std::string_view token);

NormalizedText normalize(std::string_view text);

// Joins a 1- or 2-lemma feature the same way the vectorizer does.
std::string join_lemmas(const std::vector<std::string>& lemmas);

// Built-in english stopword list ("builtin-v1"), already closed under
// lemmatization.
const std::unordered_set<std::string>& builtin_stopwords();

// One word per line; '#' comments and blank lines ignored. Each word is
// inserted both verbatim (lowercased) and lemmatized.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& file);

}  // namespace racov
