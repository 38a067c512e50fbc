#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "segtile/segmenter.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"

namespace segtile {
namespace {

using Vec = std::vector<double>;

std::vector<UtteranceVector> as_vectors(const std::vector<Vec>& vs) {
  std::vector<UtteranceVector> out;
  for (std::size_t i = 0; i < vs.size(); ++i) out.push_back({vs[i], i});
  return out;
}

SimilarityProfile profile_of(std::vector<double> sims) {
  std::vector<std::size_t> map(sims.size());
  for (std::size_t g = 0; g < map.size(); ++g) map[g] = g + 1;
  return SimilarityProfile::from_sims(std::move(sims), std::move(map));
}

std::vector<std::size_t> boundaries(const BoundaryLabels& l) { return labels_to_boundaries(l); }

// Two clusters around orthogonal unit axes, tiny noise.
std::vector<Vec> two_clusters(std::size_t left, std::size_t right, std::size_t dim,
                              double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<Vec> out;
  for (std::size_t i = 0; i < left + right; ++i) {
    Vec v(dim);
    for (auto& x : v) x = n(rng);
    v[i < left ? 0 : 1] += 1.0;
    out.push_back(v);
  }
  return out;
}

TEST(Cosine, Examples) {
  EXPECT_EQ(cosine_similarity(Vec{1, 0}, Vec{1, 0}), 1.0);
  EXPECT_EQ(cosine_similarity(Vec{1, 0}, Vec{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(Vec{1, 2, 3}, Vec{4, 5, 6}), 32.0 / std::sqrt(1078.0), 1e-15);
  EXPECT_NEAR(cosine_similarity(Vec{1, 2, 3}, Vec{4, 5, 6}), 0.974631846, 1e-9);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine_similarity(Vec{0, 0}, Vec{1, 0}), DegenerateVectorError);
  EXPECT_THROW(cosine_similarity(Vec{1, 0}, Vec{0, 0}), DegenerateVectorError);
  EXPECT_THROW(cosine_similarity(Vec{1, 0}, Vec{1, 0, 0}), ValidationError);
}

TEST(Cosine, AgreesWithOracleAndStaysInRange) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    Vec a(1 + trial % 17), b(a.size());
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double c = cosine_similarity(a, b);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(c, static_cast<double>(testing::oracle_cosine(a, b)), 1e-12);
    EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  }
}

TEST(BlockEmbedding, Examples) {
  auto vs = as_vectors({{-2, 5}, {3, -1}, {0, 0}});
  EXPECT_EQ(block_embedding(vs, 1, 1), (Vec{3, -1}));
  EXPECT_EQ(block_embedding(vs, 0, 2), (Vec{3, 5}));
  EXPECT_EQ(block_embedding(as_vectors({{1, 0}, {0, 1}}), 0, 1), (Vec{1, 1}));
  EXPECT_THROW(block_embedding(vs, 2, 1), ValidationError);
  EXPECT_THROW(block_embedding(vs, 0, 3), ValidationError);
}

TEST(SimilarityProfile, Examples) {
  auto p = similarity_profile(as_vectors({{1, 0}, {0, 1}}), 1);
  EXPECT_EQ(p.sims, (Vec{0.0}));
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.spread, 0.0);

  p = similarity_profile(as_vectors({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}), 2);
  EXPECT_EQ(p.sims, (Vec{1, 1, 1}));
  EXPECT_EQ(p.mean, 1.0);
  EXPECT_EQ(p.spread, 0.0);

  p = similarity_profile(as_vectors({{1, 0}, {1, 0}, {0, 1}, {0, 1}}), 1);
  EXPECT_EQ(p.sims, (Vec{1, 0, 1}));
  EXPECT_NEAR(p.mean, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.spread, std::sqrt(2.0) / 3.0, 1e-15);
  EXPECT_NEAR(p.spread, 0.4714, 1e-4);
  EXPECT_EQ(p.gap_index_map, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(SimilarityProfile, Errors) {
  EXPECT_THROW(similarity_profile(as_vectors({{1, 0}}), 1), TooShortError);
  EXPECT_THROW(similarity_profile(as_vectors({}), 1), TooShortError);
  EXPECT_THROW(similarity_profile(as_vectors({{1, 0}, {0, 1}}), 0), ValidationError);
}

TEST(SimilarityProfile, StatsMatchOracle) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec> vs(3 + trial);
    for (auto& v : vs) {
      v.resize(6);
      for (auto& x : v) x = n(rng);
    }
    auto p = similarity_profile(as_vectors(vs), 1 + trial % 5);
    EXPECT_NEAR(p.mean, static_cast<double>(testing::oracle_mean(p.sims)), 1e-14);
    EXPECT_NEAR(p.spread, static_cast<double>(testing::oracle_population_std(p.sims)), 1e-14);
    for (double s : p.sims) {
      EXPECT_GE(s, -1.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(SimilarityProfile, BlocksClipAtEdgesAndNeverCrossTheGap) {
  // A distinct one-hot per position shows exactly which vectors each block pooled.
  const std::size_t n = 7, w = 3;
  std::vector<Vec> vs(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) vs[i][i] = 1.0;
  auto p = similarity_profile(as_vectors(vs), w);
  ASSERT_EQ(p.size(), n - 1);
  for (double s : p.sims) EXPECT_EQ(s, 0.0) << "disjoint blocks of one-hots are orthogonal";

  // Overlap vector: every utterance shares component n, so sim counts pooled sizes.
  for (auto& v : vs) v.push_back(1.0);
  p = similarity_profile(as_vectors(vs), w);
  for (std::size_t g = 0; g + 1 < n; ++g) {
    const double left = static_cast<double>(std::min(g + 1, w));
    const double right = static_cast<double>(std::min(n - 1 - g, w));
    EXPECT_NEAR(p.sims[g], 1.0 / std::sqrt((left + 1) * (right + 1)), 1e-15) << "gap " << g;
  }
}

TEST(DetectBoundaries, Examples) {
  auto p = profile_of({0.9, 0.1, 0.9, 0.9});
  EXPECT_NEAR(p.mean, 0.7, 1e-15);
  EXPECT_NEAR(p.spread, std::sqrt(0.12), 1e-15);
  EXPECT_EQ(boundaries(detect_boundaries(p, 1.0, 5)), (std::vector<std::size_t>{2}));

  p = profile_of({0.2, 0.8});
  EXPECT_EQ(boundaries(detect_boundaries(p, 0.0, 3)), (std::vector<std::size_t>{1}));

  p = profile_of({0.4, 0.4, 0.4, 0.4});
  EXPECT_EQ(detect_boundaries(p, 0.0, 5).count(), 0u);
  EXPECT_EQ(detect_boundaries(p, 1.0, 5).count(), 0u);
}

TEST(DetectBoundaries, StrictInequalityAtThreshold) {
  // mean 0.5, spread 0.5: threshold at c=1 is 0.0, equal to the lowest sim.
  auto p = profile_of({0.0, 1.0});
  EXPECT_EQ(p.mean - p.spread, 0.0);
  EXPECT_EQ(detect_boundaries(p, 1.0, 3).count(), 0u);
}

TEST(DetectBoundaries, LabelsGoThroughGapMapAndNeverOnZero) {
  auto p = SimilarityProfile::from_sims({0.1, 0.9, 0.9}, {0, 4, 6});
  auto l = detect_boundaries(p, 0.0, 8);
  EXPECT_EQ(l.count(), 0u) << "a gap mapped to index 0 never labels it";
  p = SimilarityProfile::from_sims({0.9, 0.1, 0.9}, {2, 4, 6});
  EXPECT_EQ(labels_to_boundary_string(detect_boundaries(p, 0.0, 8)), "00001000");
  EXPECT_THROW(detect_boundaries(p, 0.0, 5), ValidationError);
  EXPECT_THROW(detect_boundaries(p, -1.0, 8), ValidationError);
  EXPECT_THROW(detect_boundaries(p, std::nan(""), 8), ValidationError);
}

TEST(DetectBoundaries, MaskChecks) {
  auto p = SimilarityProfile::from_sims({0.9, 0.1, 0.9}, {2, 4, 6});
  EligibilityMask good({1, 0, 1, 0, 1, 0, 1, 0});
  EXPECT_EQ(boundaries(detect_boundaries(p, 1.0, 8, good)), (std::vector<std::size_t>{4}));
  EXPECT_THROW(detect_boundaries(p, 1.0, 8, EligibilityMask({1, 0, 1, 0, 0, 0, 1, 0})),
               ValidationError);
  EXPECT_THROW(detect_boundaries(p, 1.0, 8, EligibilityMask::all(7)), ValidationError);
}

TEST(DetectBoundaries, MinSeparationKeepsLowestScore) {
  auto p = profile_of({0.9, 0.2, 0.1, 0.3, 0.9, 0.9, 0.9, 0.25, 0.9});
  EXPECT_EQ(boundaries(detect_boundaries(p, 0.0, 10, 0)),
            (std::vector<std::size_t>{2, 3, 4, 8}));
  EXPECT_EQ(boundaries(detect_boundaries(p, 0.0, 10, 3)), (std::vector<std::size_t>{3, 8}));
  EXPECT_EQ(boundaries(detect_boundaries(p, 0.0, 10, 1)),
            (std::vector<std::size_t>{2, 3, 4, 8}));
  EXPECT_EQ(boundaries(detect_boundaries(p, 0.0, 10, 20)), (std::vector<std::size_t>{3}));
}

TEST(SmoothProfile, MovingAverage) {
  auto p = profile_of({0.0, 0.3, 0.9, 0.3});
  auto s = smooth_profile(p, 3);
  EXPECT_NEAR(s.sims[0], 0.15, 1e-15);
  EXPECT_NEAR(s.sims[1], 0.4, 1e-15);
  EXPECT_NEAR(s.sims[2], 0.5, 1e-15);
  EXPECT_NEAR(s.sims[3], 0.6, 1e-15);
  EXPECT_EQ(s.gap_index_map, p.gap_index_map);
  EXPECT_EQ(smooth_profile(p, 1).sims, p.sims);
  EXPECT_EQ(smooth_profile(p, 0).sims, p.sims);
}

TEST(Segment, TwoSeparatedClustersGiveOneBoundaryAtTheSwitch) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t left = 12 + seed, right = 30 - seed;
    auto t = testing::long_caption_transcript(left + right);
    auto b = testing::pooled_bundle(two_clusters(left, right, 8, 0.02, seed));
    auto labels = segment(t, b, SegmenterConfig{}, default_filler_lexicon());
    EXPECT_EQ(boundaries(labels), (std::vector<std::size_t>{left})) << "seed " << seed;
  }
}

TEST(Segment, IdenticalEmbeddingsGiveNoBoundaries) {
  auto t = testing::long_caption_transcript(25);
  auto b = testing::pooled_bundle(std::vector<Vec>(25, Vec{0.2, -0.4, 0.9}));
  auto seg = run_segmentation(t, b, SegmenterConfig{}, default_filler_lexicon());
  EXPECT_EQ(seg.profile.spread, 0.0);
  EXPECT_EQ(seg.labels.count(), 0u);
  EXPECT_EQ(seg.labels.size(), 25u);
}

TEST(Segment, OneEligibleUtteranceIsTooShort) {
  auto t = testing::parse_string(
      "{\"id\":\"a\",\"text\":\"this caption is comfortably long enough\"}\n"
      "{\"id\":\"b\",\"text\":\"uh um\"}\n"
      "{\"id\":\"c\",\"text\":\"short\"}\n");
  EmbeddingBundle named;
  named.dim = 2;
  named.mode = BundleMode::Pooled;
  named.add("a", {{1, 0}});
  EXPECT_THROW(segment(t, named, SegmenterConfig{}, default_filler_lexicon()), TooShortError);
}

TEST(Segment, IneligibleUtterancesStayZeroAndLabelsLandOnEligibleOnes) {
  // Cluster switch at index 9, but 9 and 10 are too short: the boundary moves
  // to the first eligible utterance right of the gap.
  const std::size_t m = 24;
  std::vector<Utterance> utts;
  std::vector<Vec> vecs;
  for (std::size_t i = 0; i < m; ++i) {
    const bool tiny = (i == 9 || i == 10);
    utts.push_back({"u" + std::to_string(i), std::nullopt,
                    tiny ? "mm-hmm" : "a long enough caption number " + std::to_string(i),
                    std::nullopt, std::nullopt});
    vecs.push_back(i < 9 ? Vec{1, 0.01 * double(i)} : Vec{0.01 * double(i), 1});
  }
  Transcript t(std::move(utts));
  auto b = testing::pooled_bundle(vecs);
  auto seg = run_segmentation(t, b, SegmenterConfig{}, default_filler_lexicon());
  EXPECT_EQ(seg.profile.size(), m - 2 - 1);
  EXPECT_EQ(boundaries(seg.labels), (std::vector<std::size_t>{11}));
  EXPECT_EQ(seg.labels[9], 0);
  EXPECT_EQ(seg.labels[10], 0);
}

TEST(Segment, ConfigValidation) {
  auto t = testing::long_caption_transcript(5);
  auto b = testing::pooled_bundle({{1}, {1}, {1}, {1}, {1}});
  SegmenterConfig cfg;
  cfg.window = 0;
  EXPECT_THROW(segment(t, b, cfg, default_filler_lexicon()), ValidationError);
  cfg = {};
  cfg.multiplier = -0.5;
  EXPECT_THROW(segment(t, b, cfg, default_filler_lexicon()), ValidationError);
  EXPECT_EQ(SegmenterConfig{}.effective_min_separation(), 10u);
  cfg = {};
  cfg.min_separation = 0;
  EXPECT_EQ(cfg.effective_min_separation(), 0u);
}

// ---- invariants ----

class PlantedInvariants : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  testing::PlantedCorpus corpus = testing::make_planted_corpus(GetParam());
};

EmbeddingBundle rescaled(const EmbeddingBundle& b, const std::function<double(std::size_t)>& f) {
  EmbeddingBundle out;
  out.dim = b.dim;
  out.mode = b.mode;
  for (std::size_t i = 0; i < b.order.size(); ++i) {
    const auto* m = b.find(b.order[i]);
    std::vector<double> data(m->data().begin(), m->data().end());
    for (auto& x : data) x *= f(i);
    out.add(b.order[i], TokenMatrix(b.dim, std::move(data)));
  }
  return out;
}

TEST_P(PlantedInvariants, GlobalPositiveScalingLeavesLabelsUnchanged) {
  const auto& lex = default_filler_lexicon();
  const auto base = run_segmentation(corpus.transcript, corpus.bundle, {}, lex);
  for (double s : {2.0, 0.5, 1024.0}) {
    auto seg = run_segmentation(corpus.transcript, rescaled(corpus.bundle, [&](auto) { return s; }),
                                {}, lex);
    EXPECT_EQ(seg.profile.sims, base.profile.sims) << "power-of-two scale " << s;
    EXPECT_EQ(seg.labels, base.labels);
  }
  for (double s : {3.7, 1e-3, 12345.678}) {
    auto seg = run_segmentation(corpus.transcript, rescaled(corpus.bundle, [&](auto) { return s; }),
                                {}, lex);
    for (std::size_t g = 0; g < seg.profile.size(); ++g)
      EXPECT_NEAR(seg.profile.sims[g], base.profile.sims[g], 1e-12);
    EXPECT_EQ(seg.labels, base.labels) << "scale " << s;
  }
}

TEST_P(PlantedInvariants, PerVectorPositiveScalingWithSingleUtteranceBlocks) {
  SegmenterConfig cfg;
  cfg.window = 1;
  const auto& lex = default_filler_lexicon();
  const auto base = run_segmentation(corpus.transcript, corpus.bundle, cfg, lex);
  std::mt19937_64 rng(GetParam() * 31 + 1);
  std::uniform_real_distribution<double> log_scale(-6.0, 6.0);
  std::vector<double> scales(corpus.transcript.size());
  for (auto& s : scales) s = std::exp(log_scale(rng));
  auto seg = run_segmentation(corpus.transcript,
                              rescaled(corpus.bundle, [&](std::size_t i) { return scales[i]; }),
                              cfg, lex);
  for (std::size_t g = 0; g < seg.profile.size(); ++g)
    EXPECT_NEAR(seg.profile.sims[g], base.profile.sims[g], 1e-12);
  EXPECT_EQ(seg.labels, base.labels);
}

TEST_P(PlantedInvariants, BoundarySetsShrinkAsMultiplierGrows) {
  auto profile =
      run_segmentation(corpus.transcript, corpus.bundle, {}, default_filler_lexicon()).profile;
  const std::size_t m = corpus.transcript.size();
  BoundaryLabels prev = detect_boundaries(profile, 0.0, m);
  for (double c = 0.125; c <= 3.0; c += 0.125) {
    auto cur = detect_boundaries(profile, c, m);
    for (std::size_t i = 0; i < cur.size(); ++i)
      EXPECT_TRUE(!cur[i] || prev[i]) << "c=" << c << " index " << i;
    prev = cur;
  }
}

TEST_P(PlantedInvariants, ProfileLengthIsEligibleCountMinusOne) {
  for (std::size_t min_chars : {0u, 20u, 60u}) {
    SegmenterConfig cfg;
    cfg.min_chars = min_chars;
    const auto mask = eligibility_mask(corpus.transcript, min_chars, default_filler_lexicon());
    if (mask.eligible_count() < 2) continue;
    auto seg = run_segmentation(corpus.transcript, corpus.bundle, cfg, default_filler_lexicon());
    EXPECT_EQ(seg.profile.size(), mask.eligible_count() - 1);
  }
}

TEST_P(PlantedInvariants, Deterministic) {
  auto a = run_segmentation(corpus.transcript, corpus.bundle, {}, default_filler_lexicon());
  auto b = run_segmentation(corpus.transcript, corpus.bundle, {}, default_filler_lexicon());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.profile.sims, b.profile.sims);
  EXPECT_EQ(a.profile.mean, b.profile.mean);
  EXPECT_EQ(a.profile.spread, b.profile.spread);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PlantedInvariants, ::testing::Range<std::uint64_t>(100, 110));

TEST(Invariants, PerVectorScalingCanChangeWiderBlocks) {
  // Max pooling mixes coordinates from vectors of different norms, so
  // independent rescaling is only profile-neutral for single-vector blocks.
  auto vs = as_vectors({{1, 0}, {0, 1}, {1, 1}, {1, 0}});
  auto scaled = vs;
  for (auto& x : scaled[0].values) x *= 10.0;
  auto a = similarity_profile(vs, 2), b = similarity_profile(scaled, 2);
  EXPECT_NE(a.sims[1], b.sims[1]);
  auto a1 = similarity_profile(vs, 1), b1 = similarity_profile(scaled, 1);
  for (std::size_t g = 0; g < a1.size(); ++g) EXPECT_NEAR(a1.sims[g], b1.sims[g], 1e-15);
}

TEST(Invariants, PlantedGapIsTheStrictMinimum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t left = 5 + seed % 7, right = 4 + seed % 5;  // >= 3 gaps
    auto vs = two_clusters(left, right, 16, 0.01, seed);
    // Construction check: intra >= 0.99, cross <= 0.01 for the cluster axes.
    for (std::size_t i = 1; i < vs.size(); ++i)
      if ((i < left) == (i - 1 < left)) {
        EXPECT_GE(cosine_similarity(vs[i], vs[i - 1]), 0.99);
      }
    for (std::size_t w : {1u, 2u, 5u, 10u}) {
      auto p = similarity_profile(as_vectors(vs), w);
      const std::size_t planted = left - 1;
      for (std::size_t g = 0; g < p.size(); ++g)
        if (g != planted) {
          EXPECT_LT(p.sims[planted], p.sims[g]) << "seed " << seed << " w " << w;
        }
    }
  }
}

}  // namespace
}  // namespace segtile
