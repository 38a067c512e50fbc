#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "segtile/error.hpp"
#include "segtile/preprocess.hpp"
#include "segtile/transcript.hpp"

namespace segtile {

// dot(a, b) / (|a| |b|), clamped to [-1, 1].
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("cosine of vectors with dimensions " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVectorError("cosine of an all-zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct ProfileStats {
  double mean = 0.0;
  double spread = 0.0;  // population standard deviation
};

// Mean and population standard deviation. Values are shifted by the first
// element before summing, so a constant sequence yields that constant and a
// spread of exactly zero.
inline ProfileStats profile_stats(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double shift = xs.front();
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x - shift;
  const double centered_mean = sum / n;
  double ss = 0.0;
  for (double x : xs) {
    const double d = (x - shift) - centered_mean;
    ss += d * d;
  }
  return {shift + centered_mean, std::sqrt(ss / n)};
}

// Per-gap similarity scores. gap_index_map[g] is the original transcript index
// of the first utterance to the right of gap g.
struct SimilarityProfile {
  std::vector<double> sims;
  std::vector<std::size_t> gap_index_map;
  double mean = 0.0;
  double spread = 0.0;
  // Gaps whose score was defined rather than measured (an empty term block).
  std::vector<std::size_t> degenerate_gaps;

  static SimilarityProfile from_sims(std::vector<double> sims, std::vector<std::size_t> gap_map) {
    if (sims.size() != gap_map.size())
      throw ValidationError("profile has " + std::to_string(sims.size()) + " scores but " +
                            std::to_string(gap_map.size()) + " gap positions");
    SimilarityProfile p;
    auto stats = profile_stats(sims);
    p.sims = std::move(sims);
    p.gap_index_map = std::move(gap_map);
    p.mean = stats.mean;
    p.spread = stats.spread;
    return p;
  }

  std::size_t size() const noexcept { return sims.size(); }
};

// Centered moving average over `width` gaps, clipped at the edges. Widths of 0
// or 1 leave the profile untouched.
inline SimilarityProfile smooth_profile(const SimilarityProfile& p, std::size_t width) {
  if (width <= 1 || p.size() < 2) return p;
  const std::size_t half_lo = (width - 1) / 2;
  const std::size_t half_hi = width / 2;
  std::vector<double> out(p.size());
  for (std::size_t g = 0; g < p.size(); ++g) {
    const std::size_t lo = g >= half_lo ? g - half_lo : 0;
    const std::size_t hi = std::min(p.size() - 1, g + half_hi);
    double s = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) s += p.sims[i];
    out[g] = s / static_cast<double>(hi - lo + 1);
  }
  auto smoothed = SimilarityProfile::from_sims(std::move(out), p.gap_index_map);
  smoothed.degenerate_gaps = p.degenerate_gaps;
  return smoothed;
}

// Gap g is a boundary iff sims[g] < mean - multiplier * spread. The label goes
// on gap_index_map[g]; label 0 is never set. With min_separation > 0, boundary
// candidates closer than that many utterances are thinned, lowest score first.
inline BoundaryLabels detect_boundaries(const SimilarityProfile& p, double multiplier,
                                        std::size_t m, std::size_t min_separation = 0) {
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier))
    throw ValidationError("threshold multiplier must be a finite value >= 0");
  if (p.sims.size() != p.gap_index_map.size())
    throw ValidationError("profile scores and gap positions differ in length");
  const double threshold = p.mean - multiplier * p.spread;

  std::vector<std::size_t> candidates;
  for (std::size_t g = 0; g < p.size(); ++g) {
    const auto idx = p.gap_index_map[g];
    if (idx >= m)
      throw ValidationError("gap position " + std::to_string(idx) + " outside transcript of " +
                            std::to_string(m));
    if (idx > 0 && p.sims[g] < threshold) candidates.push_back(g);
  }

  BoundaryLabels out(m);
  if (min_separation == 0) {
    for (auto g : candidates) out.labels[p.gap_index_map[g]] = 1;
    return out;
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return p.sims[a] < p.sims[b]; });
  std::vector<std::size_t> accepted;
  for (auto g : candidates) {
    const auto idx = p.gap_index_map[g];
    bool clear = std::none_of(accepted.begin(), accepted.end(), [&](std::size_t other) {
      const auto d = idx > other ? idx - other : other - idx;
      return d < min_separation;
    });
    if (clear) accepted.push_back(idx);
  }
  for (auto idx : accepted) out.labels[idx] = 1;
  return out;
}

// As above, additionally checking that the mask matches the transcript length
// and that every scored gap lands on an eligible utterance.
inline BoundaryLabels detect_boundaries(const SimilarityProfile& p, double multiplier,
                                        std::size_t m, const EligibilityMask& mask,
                                        std::size_t min_separation = 0) {
  if (mask.size() != m)
    throw ValidationError("eligibility mask has " + std::to_string(mask.size()) +
                          " entries for a transcript of " + std::to_string(m));
  for (auto idx : p.gap_index_map)
    if (idx >= m || !mask.eligible[idx])
      throw ValidationError("gap position " + std::to_string(idx) +
                            " is not an eligible utterance");
  return detect_boundaries(p, multiplier, m, min_separation);
}

}  // namespace segtile
