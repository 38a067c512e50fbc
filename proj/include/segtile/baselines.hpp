#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "segtile/error.hpp"
#include "segtile/preprocess.hpp"
#include "segtile/similarity.hpp"
#include "segtile/transcript.hpp"

namespace segtile {

// Sparse bag of words. Zero counts are never stored.
class TermVector {
 public:
  void add(const std::string& term, std::size_t n = 1) {
    if (n) counts_[term] += n;
  }
  void merge(const TermVector& other) {
    for (const auto& [t, n] : other.counts_) counts_[t] += n;
  }

  bool empty() const noexcept { return counts_.empty(); }
  std::size_t size() const noexcept { return counts_.size(); }
  std::size_t count(const std::string& term) const {
    auto it = counts_.find(term);
    return it == counts_.end() ? 0 : it->second;
  }
  const std::map<std::string, std::size_t>& counts() const noexcept { return counts_; }

 private:
  std::map<std::string, std::size_t> counts_;
};

// Cosine of two count vectors; 0 when either is empty. Counts are integers, so
// the products are exact and parallel vectors score exactly 1.
inline double term_cosine(const TermVector& a, const TermVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  using wide = unsigned __int128;
  wide dot = 0, na = 0, nb = 0;
  auto ia = a.counts().begin(), ib = b.counts().begin();
  while (ia != a.counts().end() && ib != b.counts().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += wide(ia->second) * ib->second;
      ++ia;
      ++ib;
    }
  }
  for (const auto& [t, n] : a.counts()) na += wide(n) * n;
  for (const auto& [t, n] : b.counts()) nb += wide(n) * n;
  if (dot == 0) return 0.0;
  if (dot * dot == na * nb) return 1.0;
  const double d = static_cast<double>(dot);
  return std::clamp(d / (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb))),
                    0.0, 1.0);
}

using StopwordSet = std::set<std::string>;

inline const StopwordSet& default_stopwords() {
  static const StopwordSet words{
      "a",     "about", "after",  "all",   "also",  "am",    "an",    "and",   "any",
      "are",   "as",    "at",     "be",    "been",  "but",   "by",    "can",   "could",
      "did",   "do",    "does",   "don't", "for",   "from",  "had",   "has",   "have",
      "he",    "her",   "him",    "his",   "how",   "i",     "i'm",   "if",    "in",
      "into",  "is",    "it",     "it's",  "its",   "just",  "me",    "more",  "my",
      "no",    "not",   "now",    "of",    "on",    "one",   "or",    "our",   "out",
      "she",   "should", "so",    "some",  "than",  "that",  "that's", "the",  "their",
      "them",  "then",  "there",  "these", "they",  "this",  "those", "to",    "too",
      "up",    "us",    "very",   "was",   "we",    "well",  "were",  "what",  "when",
      "where", "which", "who",    "why",   "will",  "with",  "would", "yeah",  "yes",
      "you",   "your",  "uh",     "um",    "mm",    "hmm",   "oh",    "ah",    "okay",
      "like",  "really", "think", "know",  "mean",  "right", "got",   "get",   "go",
      "going", "there's", "we're", "you're", "they're", "i'll", "can't", "it'll"};
  return words;
}

inline StopwordSet read_stopwords(const std::string& path) {
  StopwordSet out;
  for (auto& t : read_term_file(path)) out.insert(detail::ascii_lower(t));
  return out;
}

// Lowercased, bracket-free, punctuation-trimmed tokens minus stopwords.
inline TermVector term_vector(std::string_view text, const StopwordSet& stopwords) {
  TermVector tv;
  for (const auto& tok : detail::split_ws(detail::strip_brackets(text))) {
    auto form = match_form(tok);
    if (form.empty() || stopwords.contains(form)) continue;
    tv.add(form);
  }
  return tv;
}

// Word-frequency similarity profile over sliding blocks of up to w eligible
// utterances on each side of every gap. A gap with an empty block scores 0
// and is listed in degenerate_gaps.
inline SimilarityProfile texttiling_profile(const Transcript& t, const EligibilityMask& mask,
                                            std::size_t w, const StopwordSet& stopwords) {
  if (w < 1) throw ValidationError("block window must be >= 1");
  if (mask.size() != t.size())
    throw ValidationError("eligibility mask has " + std::to_string(mask.size()) +
                          " entries for a transcript of " + std::to_string(t.size()));
  const auto& kept = mask.kept_indices;
  if (kept.size() < 2)
    throw TooShortError("need at least 2 eligible utterances, have " +
                        std::to_string(kept.size()));

  std::vector<TermVector> per_utt;
  per_utt.reserve(kept.size());
  for (auto idx : kept) per_utt.push_back(term_vector(t[idx].text, stopwords));

  const std::size_t n = kept.size();
  std::vector<double> sims;
  std::vector<std::size_t> gap_map;
  std::vector<std::size_t> degenerate;
  for (std::size_t g = 0; g + 1 < n; ++g) {
    TermVector left, right;
    for (std::size_t i = g + 1 >= w ? g + 1 - w : 0; i <= g; ++i) left.merge(per_utt[i]);
    for (std::size_t i = g + 1; i <= std::min(n - 1, g + w); ++i) right.merge(per_utt[i]);
    if (left.empty() || right.empty()) degenerate.push_back(g);
    sims.push_back(term_cosine(left, right));
    gap_map.push_back(kept[g + 1]);
  }
  auto p = SimilarityProfile::from_sims(std::move(sims), std::move(gap_map));
  p.degenerate_gaps = std::move(degenerate);
  return p;
}

// Hearst depth score per gap: rise to the nearest peak on each side, summed.
inline std::vector<double> depth_scores(std::span<const double> sims) {
  std::vector<double> depth(sims.size(), 0.0);
  for (std::size_t g = 0; g < sims.size(); ++g) {
    double lpeak = sims[g];
    for (std::size_t i = g; i > 0 && sims[i - 1] >= lpeak; --i) lpeak = sims[i - 1];
    double rpeak = sims[g];
    for (std::size_t i = g + 1; i < sims.size() && sims[i] >= rpeak; ++i) rpeak = sims[i];
    depth[g] = (lpeak - sims[g]) + (rpeak - sims[g]);
  }
  return depth;
}

// Classic TextTiling cutoff: a local minimum whose depth exceeds
// mean(depth) - stddev(depth) / 2.
inline BoundaryLabels depth_boundaries(const SimilarityProfile& p, std::size_t m) {
  auto depth = depth_scores(p.sims);
  auto stats = profile_stats(depth);
  const double cutoff = stats.mean - stats.spread / 2.0;
  BoundaryLabels out(m);
  for (std::size_t g = 0; g < p.size(); ++g) {
    const bool local_min = (g == 0 || p.sims[g] <= p.sims[g - 1]) &&
                           (g + 1 == p.size() || p.sims[g] <= p.sims[g + 1]);
    const auto idx = p.gap_index_map[g];
    if (idx >= m) throw ValidationError("gap position outside transcript");
    if (local_min && depth[g] > 0.0 && depth[g] > cutoff && idx > 0) out.labels[idx] = 1;
  }
  return out;
}

enum class TextTilingScoring { Threshold, Depth };

// Same block/threshold rule as the embedding segmenter, scored on word counts.
// min_separation defaults to the block window, as in SegmenterConfig.
inline BoundaryLabels texttiling_baseline(const Transcript& t, const EligibilityMask& mask,
                                          std::size_t w, const StopwordSet& stopwords,
                                          double multiplier,
                                          std::optional<std::size_t> min_separation = std::nullopt,
                                          TextTilingScoring scoring = TextTilingScoring::Threshold) {
  auto p = texttiling_profile(t, mask, w, stopwords);
  if (scoring == TextTilingScoring::Depth) return depth_boundaries(p, t.size());
  return detect_boundaries(p, multiplier, t.size(), mask, min_separation.value_or(w));
}

// b distinct positions drawn uniformly without replacement from 1..m-1.
inline BoundaryLabels random_baseline(std::size_t m, std::size_t b, std::uint64_t seed) {
  if (m == 0) throw ValidationError("transcript length must be >= 1");
  if (b > m - 1)
    throw ValidationError("cannot place " + std::to_string(b) + " boundaries in " +
                          std::to_string(m) + " utterances");
  std::vector<std::size_t> positions(m - 1);
  std::iota(positions.begin(), positions.end(), std::size_t{1});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first b slots end up a uniform sample.
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, positions.size() - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  BoundaryLabels out(m);
  for (std::size_t i = 0; i < b; ++i) out.labels[positions[i]] = 1;
  return out;
}

// Boundaries at n, 2n, 3n, ... below m.
inline BoundaryLabels even_baseline(std::size_t m, std::size_t n) {
  if (n < 1) throw ValidationError("period must be >= 1");
  BoundaryLabels out(m);
  for (std::size_t i = n; i < m; i += n) out.labels[i] = 1;
  return out;
}

// Reference boundary count when a reference exists, else floor(m / 30).
inline std::size_t default_random_count(std::size_t m, const std::optional<BoundaryLabels>& ref) {
  std::size_t b = 0;
  if (ref) {
    for (std::size_t i = 1; i < ref->size(); ++i) b += (*ref)[i] ? 1 : 0;
  } else {
    b = m / 30;
  }
  return std::min(b, m > 0 ? m - 1 : 0);
}

// Smallest period placing at most `count` boundaries: floor((m-1)/(count+1)) + 1.
// This places exactly `count` evenly spaced boundaries whenever
// count * (count + 1) <= m - 1. A count of zero gives a period of m.
inline std::size_t default_even_period(std::size_t m, std::size_t count) {
  if (m <= 1 || count == 0) return std::max<std::size_t>(m, 1);
  return (m - 1) / (count + 1) + 1;
}

}  // namespace segtile
