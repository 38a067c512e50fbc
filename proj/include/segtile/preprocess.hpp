#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "segtile/error.hpp"
#include "segtile/transcript.hpp"

namespace segtile {

inline constexpr std::size_t kDefaultMinChars = 20;

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Drops "[...]" annotations such as "[disfluency]". An unmatched '[' is kept.
inline std::string strip_brackets(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      auto close = s.find(']', i + 1);
      if (close != std::string_view::npos) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t n) {
  std::string out;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) out.push_back(' ');
    out += tokens[from + k];
  }
  return out;
}

}  // namespace detail

// Lowercase token with leading and trailing punctuation removed ("uh," -> "uh").
// Inner punctuation survives so "mm-hmm" and "don't" stay whole.
inline std::string match_form(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && detail::is_punct(token[b])) ++b;
  while (e > b && detail::is_punct(token[e - 1])) --e;
  return detail::ascii_lower(token.substr(b, e - b));
}

// Count of UTF-8 code points.
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

// Set of lowercase filler terms. Multi-word entries ("you know") match as
// consecutive tokens. An empty lexicon disables filler removal.
class FillerLexicon {
 public:
  FillerLexicon() = default;

  template <typename Range>
  explicit FillerLexicon(const Range& terms) {
    for (const auto& t : terms) add(t);
  }
  FillerLexicon(std::initializer_list<std::string_view> terms) {
    for (auto t : terms) add(t);
  }

  void add(std::string_view term) {
    auto words = detail::split_ws(detail::ascii_lower(term));
    if (words.empty()) return;
    max_words_ = std::max(max_words_, words.size());
    terms_.insert(detail::join(words, 0, words.size()));
  }

  bool contains(const std::string& term) const { return terms_.contains(term); }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t max_words() const noexcept { return max_words_; }
  const std::set<std::string>& terms() const noexcept { return terms_; }

 private:
  std::set<std::string> terms_;
  std::size_t max_words_ = 0;
};

inline const FillerLexicon& default_filler_lexicon() {
  static const FillerLexicon lex{"uh",   "um",       "erm",    "mm",   "hmm",  "mm-hmm",
                                 "uh-huh", "huh",    "oh",     "ah",   "like", "okay",
                                 "so",   "yeah",     "you know", "i mean"};
  return lex;
}

// One term per line; '#' starts a comment. Used for filler and stopword files.
inline std::vector<std::string> read_term_list(std::istream& in) {
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto words = detail::split_ws(line);
    if (!words.empty()) terms.push_back(detail::join(words, 0, words.size()));
  }
  return terms;
}

inline std::vector<std::string> read_term_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open term list '" + path + "'");
  return read_term_list(in);
}

inline FillerLexicon read_filler_lexicon(const std::string& path) {
  FillerLexicon lex(read_term_file(path));
  if (lex.empty()) throw ValidationError("filler lexicon '" + path + "' has no terms");
  return lex;
}

namespace detail {

inline std::vector<std::string> remove_fillers(const std::vector<std::string>& tokens,
                                               const FillerLexicon& lex) {
  std::vector<std::string> forms;
  forms.reserve(tokens.size());
  for (const auto& t : tokens) forms.push_back(match_form(t));

  std::vector<std::string> kept;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    for (std::size_t n = std::min(lex.max_words(), tokens.size() - i); n >= 1; --n) {
      if (lex.contains(join(forms, i, n))) {
        matched = n;
        break;
      }
    }
    if (matched) {
      i += matched;
    } else {
      kept.push_back(tokens[i++]);
    }
  }
  return kept;
}

}  // namespace detail

// Lowercases, drops bracketed annotations and filler terms, and rejoins the
// remaining tokens with single spaces. Removal repeats until nothing changes,
// so a filler pair exposed by an earlier removal ("you uh know") also goes.
inline std::string normalize_text(std::string_view text, const FillerLexicon& lex) {
  auto tokens = detail::split_ws(detail::ascii_lower(detail::strip_brackets(text)));
  if (!lex.empty()) {
    while (true) {
      auto next = detail::remove_fillers(tokens, lex);
      if (next.size() == tokens.size()) break;
      tokens = std::move(next);
    }
  }
  return detail::join(tokens, 0, tokens.size());
}

struct EligibilityMask {
  std::vector<std::uint8_t> eligible;
  std::vector<std::size_t> kept_indices;

  EligibilityMask() = default;
  explicit EligibilityMask(std::vector<std::uint8_t> flags) : eligible(std::move(flags)) {
    for (std::size_t i = 0; i < eligible.size(); ++i)
      if (eligible[i]) kept_indices.push_back(i);
  }

  static EligibilityMask all(std::size_t m) {
    return EligibilityMask(std::vector<std::uint8_t>(m, 1));
  }

  std::size_t size() const noexcept { return eligible.size(); }
  std::size_t eligible_count() const noexcept { return kept_indices.size(); }
};

inline EligibilityMask eligibility_mask(const Transcript& t, std::size_t min_chars,
                                        const FillerLexicon& lex) {
  std::vector<std::uint8_t> flags(t.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i)
    flags[i] = utf8_length(normalize_text(t[i].text, lex)) >= min_chars ? 1 : 0;
  return EligibilityMask(std::move(flags));
}

inline EligibilityMask eligibility_mask(const Transcript& t,
                                        std::size_t min_chars = kDefaultMinChars) {
  return eligibility_mask(t, min_chars, default_filler_lexicon());
}

}  // namespace segtile
