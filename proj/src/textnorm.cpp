#include "racov/textnorm.hpp"

#include <array>
#include <fstream>
#include <unordered_map>

#include "racov/error.hpp"

namespace racov {

namespace {

// Decodes one UTF-8 code point starting at `pos`; advances `pos` past it.
// Invalid bytes decode as U+FFFD one byte at a time.
char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) -> unsigned char {
    return static_cast<unsigned char>(s[i]);
  };
  unsigned char b0 = byte(pos);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + static_cast<std::size_t>(extra) >= s.size()) {
    ++pos;
    return 0xFFFD;  // truncated sequence
  }
  for (int i = 1; i <= extra; ++i) {
    unsigned char bi = byte(pos + i);
    if ((bi & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bi & 0x3F);
  }
  pos += 1 + extra;
  return cp;
}

bool is_ascii_alnum(char32_t c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

// Token-constituent code points: letters and digits. Outside ASCII we use a
// coarse block map: Latin-1 symbols and general punctuation (em dashes,
// curly quotes) split tokens, everything else counts as a letter.
bool is_word_cp(char32_t c) {
  if (c < 0x80) return is_ascii_alnum(c);
  if (c == 0xFFFD) return false;            // invalid-byte replacement
  if (c < 0xC0) return false;               // latin-1 punctuation/symbols
  if (c == 0xD7 || c == 0xF7) return false; // multiplication/division signs
  if (c < 0x2000) return true;
  if (c < 0x2070) return false;             // general punctuation block
  if (c >= 0x2E00 && c < 0x2E80) return false;  // supplemental punctuation
  if (c >= 0x3000 && c <= 0x303F) return false; // CJK punctuation
  return true;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower_with_plain_apostrophe(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  std::size_t pos = 0;
  while (pos < token.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(token, pos);
    if (cp == U'’') {
      out.push_back('\'');
    } else if (cp < 0x80) {
      out.push_back(ascii_lower(static_cast<char>(cp)));
    } else {
      out.append(token.substr(start, pos - start));
    }
  }
  return out;
}

const std::unordered_map<std::string, std::string>& lemma_exceptions() {
  static const std::unordered_map<std::string, std::string> table = {
      // be / have / do / modals
      {"am", "be"},       {"is", "be"},       {"are", "be"},
      {"was", "be"},      {"were", "be"},     {"been", "be"},
      {"being", "be"},    {"isn't", "be"},    {"aren't", "be"},
      {"wasn't", "be"},   {"weren't", "be"},  {"has", "have"},
      {"had", "have"},    {"having", "have"}, {"hasn't", "have"},
      {"haven't", "have"},{"hadn't", "have"}, {"does", "do"},
      {"did", "do"},      {"doing", "do"},    {"done", "do"},
      {"doesn't", "do"},  {"didn't", "do"},   {"don't", "do"},
      {"won't", "will"},  {"can't", "can"},   {"cannot", "can"},
      {"couldn't", "could"}, {"shouldn't", "should"}, {"wouldn't", "would"},
      // irregular plurals
      {"children", "child"}, {"men", "man"},     {"women", "woman"},
      {"people", "person"},  {"mice", "mouse"},  {"feet", "foot"},
      {"teeth", "tooth"},    {"geese", "goose"}, {"lives", "life"},
      {"wives", "wife"},     {"knives", "knife"},{"leaves", "leaf"},
      // -ie nouns that the generic ies->y rule would mangle
      {"movies", "movie"},   {"cookies", "cookie"}, {"zombies", "zombie"},
      {"calories", "calorie"}, {"rookies", "rookie"}, {"genies", "genie"},
      {"birdies", "birdie"}, {"brownies", "brownie"}, {"pixies", "pixie"},
      {"sorties", "sortie"},
      // irregular verbs common in reviews
      {"went", "go"},     {"goes", "go"},     {"going", "go"},
      {"gone", "go"},     {"saw", "see"},     {"seen", "see"},
      {"made", "make"},   {"said", "say"},    {"told", "tell"},
      {"felt", "feel"},   {"kept", "keep"},   {"left", "leave"},
      {"took", "take"},   {"taken", "take"},  {"gave", "give"},
      {"given", "give"},  {"got", "get"},     {"gotten", "get"},
      {"came", "come"},   {"found", "find"},  {"thought", "think"},
      {"used", "use"},    {"using", "use"},
      // function words the suffix rules would otherwise clip
      {"its", "its"},     {"his", "his"},     {"hers", "hers"},
      {"this", "this"},   {"thus", "thus"},   {"less", "less"},
      {"yes", "yes"},     {"as", "as"},       {"us", "us"},
      {"always", "always"}, {"perhaps", "perhaps"}, {"during", "during"},
      {"nothing", "nothing"}, {"something", "something"},
      {"anything", "anything"}, {"everything", "everything"},
  };
  return table;
}

bool has_vowel(std::string_view s) {
  for (char c : s) {
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y')
      return true;
  }
  return false;
}

bool is_vowel_char(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool ends_double_consonant(std::string_view s) {
  if (s.size() < 2) return false;
  char a = s[s.size() - 2], b = s[s.size() - 1];
  if (a != b || is_vowel_char(a)) return false;
  // doubling consonants undone after -ing/-ed stripping
  return a == 'b' || a == 'd' || a == 'f' || a == 'g' || a == 'm' ||
         a == 'n' || a == 'p' || a == 'r' || a == 't';
}

// consonant-vowel-consonant ending on a short stem, where the trailing
// consonant is not w/x/y: these drop an 'e' when inflected (make -> making).
bool short_cvc(std::string_view s) {
  if (s.size() < 3 || s.size() > 3) return false;
  char c0 = s[0], c1 = s[1], c2 = s[2];
  if (is_vowel_char(c0) || !is_vowel_char(c1) || is_vowel_char(c2))
    return false;
  return c2 != 'w' && c2 != 'x' && c2 != 'y';
}

// Undo -ing / -ed stem damage: stopp -> stop, mak -> make.
std::string repair_stem(std::string stem) {
  if (ends_double_consonant(stem)) {
    stem.pop_back();
  } else if (ends_with(stem, "at") || ends_with(stem, "bl") ||
             ends_with(stem, "iz") || short_cvc(stem)) {
    stem.push_back('e');
  }
  return stem;
}

// One rule-table pass. Returns the (possibly unchanged) word.
std::string lemma_pass(const std::string& w) {
  const auto& exc = lemma_exceptions();
  if (auto it = exc.find(w); it != exc.end()) return it->second;

  if (ends_with(w, "'s")) return w.substr(0, w.size() - 2);
  if (w.find('\'') != std::string::npos) {
    std::string out;
    for (char c : w)
      if (c != '\'') out.push_back(c);
    return out;
  }

  // plural / noun endings
  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ies")) {
    if (w.size() == 4) return w.substr(0, w.size() - 1);  // ties -> tie
    if (w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is"))
    ;  // class, focus, basis: keep
  else if (ends_with(w, "xes") || ends_with(w, "ches") ||
           ends_with(w, "shes") || ends_with(w, "zes") || ends_with(w, "oes"))
    return w.substr(0, w.size() - 2);
  else if (ends_with(w, "s") && w.size() >= 4)
    return w.substr(0, w.size() - 1);

  // verb endings
  if (ends_with(w, "ing") && w.size() >= 5) {
    std::string stem = w.substr(0, w.size() - 3);
    if (has_vowel(stem)) return repair_stem(std::move(stem));
  }
  if (ends_with(w, "ed") && w.size() >= 4) {
    std::string stem = w.substr(0, w.size() - 2);
    if (has_vowel(stem)) return repair_stem(std::move(stem));
  }
  return w;
}

}  // namespace

std::vector<std::pair<std::string, TokenSpan>> tokenize(std::string_view text) {
  std::vector<std::pair<std::string, TokenSpan>> out;
  std::size_t pos = 0;
  std::size_t token_begin = 0;
  bool in_token = false;

  // Pending apostrophe inside a token: kept only if a word char follows.
  std::size_t pending_apos_at = std::string::npos;

  auto flush = [&](std::size_t end) {
    if (!in_token) return;
    if (pending_apos_at != std::string::npos) end = pending_apos_at;
    out.emplace_back(std::string(text.substr(token_begin, end - token_begin)),
                     TokenSpan{token_begin, end});
    in_token = false;
    pending_apos_at = std::string::npos;
  };

  while (pos < text.size()) {
    std::size_t cp_begin = pos;
    char32_t cp = decode_utf8(text, pos);
    if (is_word_cp(cp)) {
      if (!in_token) {
        in_token = true;
        token_begin = cp_begin;
      }
      pending_apos_at = std::string::npos;
    } else if (is_apostrophe(cp) && in_token &&
               pending_apos_at == std::string::npos) {
      pending_apos_at = cp_begin;  // provisional: kept iff word char follows
    } else {
      flush(pending_apos_at != std::string::npos ? pending_apos_at : cp_begin);
    }
  }
  flush(pending_apos_at != std::string::npos ? pending_apos_at : text.size());
  return out;
}

std::string lemmatize(std::string_view token) {
  std::string w = lower_with_plain_apostrophe(token);
  // Iterate the rule table to a fixed point so the mapping is idempotent.
  for (int i = 0; i < 10; ++i) {
    std::string next = lemma_pass(w);
    if (next == w) break;
    w = std::move(next);
  }
  return w;
}

NormalizedText normalize(std::string_view text) {
  NormalizedText nt;
  nt.source.assign(text);
  for (auto& [token, span] : tokenize(text)) {
    nt.lemmas.push_back(lemmatize(token));
    nt.tokens.push_back(std::move(token));
    nt.offsets.push_back(span);
  }
  return nt;
}

std::string join_lemmas(const std::vector<std::string>& lemmas) {
  std::string out;
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    if (i) out.push_back(' ');
    out += lemmas[i];
  }
  return out;
}

const std::unordered_set<std::string>& builtin_stopwords() {
  static const std::unordered_set<std::string> words = [] {
    // builtin-v1: frozen list, entries already in lemma form.
    static constexpr const char* raw[] = {
        "a",     "about", "above", "after",  "again",  "against", "all",
        "an",    "and",   "any",   "as",     "at",     "be",      "because",
        "before","below", "between","both",  "but",    "by",      "can",
        "could", "do",    "down",  "during", "each",   "few",     "for",
        "from",  "further","have", "he",     "her",    "here",    "hers",
        "him",   "his",   "how",   "i",      "if",     "in",      "into",
        "it",    "its",   "itself","just",   "me",     "more",    "most",
        "my",    "no",    "nor",   "not",    "now",    "of",      "off",
        "on",    "once",  "only",  "or",     "other",  "our",     "out",
        "over",  "own",   "same",  "she",    "should", "so",      "some",
        "such",  "than",  "that",  "the",    "their",  "them",    "then",
        "there", "these", "they",  "this",   "those",  "through", "to",
        "too",   "under", "until", "up",     "very",   "we",      "what",
        "when",  "where", "which", "while",  "who",    "whom",    "why",
        "will",  "with",  "would", "you",    "your",   "yours",
    };
    std::unordered_set<std::string> set;
    for (const char* w : raw) {
      set.insert(w);
      set.insert(lemmatize(w));
    }
    return set;
  }();
  return words;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::io, "cannot open stopword file: " + file.string());
  std::unordered_set<std::string> set;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos || line[a] == '#') continue;
    std::size_t b = line.find_last_not_of(" \t");
    std::string word = line.substr(a, b - a + 1);
    std::string lowered = lower_with_plain_apostrophe(word);
    set.insert(lowered);
    set.insert(lemmatize(lowered));
  }
  return set;
}

}  // namespace racov
