#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segtile/baselines.hpp"
#include "segtile/embedding.hpp"
#include "segtile/error.hpp"
#include "segtile/preprocess.hpp"
#include "segtile/similarity.hpp"
#include "segtile/transcript.hpp"

namespace segtile {

enum class Scorer { Embedding, TermFrequency };

inline std::string_view to_string(Scorer s) {
  return s == Scorer::Embedding ? "embedding" : "term-frequency";
}

struct SegmenterConfig {
  std::size_t window = 10;   // eligible utterances per side of a gap
  double multiplier = 1.0;   // boundary iff sim < mean - multiplier * spread
  Pooling pooling = Pooling::Max;
  Scorer scorer = Scorer::Embedding;
  std::size_t min_chars = kDefaultMinChars;
  std::size_t smoothing = 0;  // moving-average width over the profile; 0 = off
  // Boundaries closer than this many utterances are thinned, lowest score
  // kept. Unset means the block window; 0 disables suppression.
  std::optional<std::size_t> min_separation;

  std::size_t effective_min_separation() const { return min_separation.value_or(window); }

  void validate() const {
    if (window < 1) throw ValidationError("block window must be >= 1");
    if (!(multiplier >= 0.0) || !std::isfinite(multiplier))
      throw ValidationError("threshold multiplier must be a finite value >= 0");
  }
};

// Elementwise max over vectors[lo..hi], inclusive.
inline std::vector<double> block_embedding(std::span<const UtteranceVector> vectors,
                                           std::size_t lo, std::size_t hi) {
  if (lo > hi || hi >= vectors.size())
    throw ValidationError("block range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "] invalid for " + std::to_string(vectors.size()) + " vectors");
  std::vector<double> out = vectors[lo].values;
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    const auto& v = vectors[i].values;
    if (v.size() != out.size()) throw DimensionError("block vectors differ in dimension");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], v[j]);
  }
  return out;
}

// Sliding profile: gap g sits between vectors g and g+1. The left block is the
// up-to-w vectors ending at g, the right block the up-to-w vectors from g+1,
// both clipped at the ends.
inline SimilarityProfile similarity_profile(std::span<const UtteranceVector> vectors,
                                            std::size_t w) {
  if (w < 1) throw ValidationError("block window must be >= 1");
  if (vectors.size() < 2)
    throw TooShortError("need at least 2 eligible utterances, have " +
                        std::to_string(vectors.size()));
  const std::size_t n = vectors.size();
  std::vector<double> sims(n - 1);
  std::vector<std::size_t> gap_map(n - 1);
  for (std::size_t g = 0; g + 1 < n; ++g) {
    const std::size_t left_lo = g + 1 >= w ? g + 1 - w : 0;
    const std::size_t right_hi = std::min(n - 1, g + w);
    auto left = block_embedding(vectors, left_lo, g);
    auto right = block_embedding(vectors, g + 1, right_hi);
    sims[g] = cosine_similarity(left, right);
    gap_map[g] = vectors[g + 1].source_index;
  }
  return SimilarityProfile::from_sims(std::move(sims), std::move(gap_map));
}

// Everything a segmentation run produces; the CLI serializes all of it.
struct Segmentation {
  BoundaryLabels labels;
  SimilarityProfile profile;
  EligibilityMask mask;
};

inline Segmentation run_segmentation(const Transcript& t, const EmbeddingBundle& b,
                                     const SegmenterConfig& cfg, const FillerLexicon& lex,
                                     const WarningSink& warn = {}) {
  cfg.validate();
  Segmentation out;
  out.mask = eligibility_mask(t, cfg.min_chars, lex);
  if (cfg.scorer == Scorer::TermFrequency) {
    out.profile = texttiling_profile(t, out.mask, cfg.window, default_stopwords());
  } else {
    auto vectors = utterance_vectors(b, t, out.mask, cfg.pooling, warn);
    out.profile = similarity_profile(vectors, cfg.window);
  }
  if (cfg.smoothing > 1) out.profile = smooth_profile(out.profile, cfg.smoothing);
  out.labels = detect_boundaries(out.profile, cfg.multiplier, t.size(), out.mask,
                                 cfg.effective_min_separation());
  return out;
}

inline BoundaryLabels segment(const Transcript& t, const EmbeddingBundle& b,
                              const SegmenterConfig& cfg, const FillerLexicon& lex) {
  return run_segmentation(t, b, cfg, lex).labels;
}

}  // namespace segtile
