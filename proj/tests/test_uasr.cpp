#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rca/errors.hpp"
#include "rca/synthetic.hpp"
#include "rca/uasr.hpp"
#include "test_util.hpp"

namespace rca {
namespace {

using testing::gaussian;
using testing::rows;

TEST(LocalUncertainty, SelfOrthogonalAntipodal) {
  const Embedding v{0.3, -1.2, 2.5};
  const Embedding minus{-0.3, 1.2, -2.5};
  EXPECT_EQ(local_uncertainty(v, v), 1.0);
  EXPECT_EQ(local_uncertainty(Embedding{1, 0}, Embedding{0, 1}), 0.0);
  EXPECT_EQ(local_uncertainty(v, minus), -1.0);
  EXPECT_THROW(local_uncertainty(Embedding{0, 0}, Embedding{0, 1}), DegenerateEmbeddingError);
}

TEST(RetrieveTopTags, AlignmentWins) {
  const auto h = retrieve_top_tags(Matrix::from_rows({{2, 0}}), Matrix::from_rows({{1, 0}, {0, 1}}));
  EXPECT_EQ(h, std::vector<std::size_t>{0});
}

TEST(RetrieveTopTags, Deduplicates) {
  const auto h = retrieve_top_tags(Matrix::from_rows({{1, 0.1}, {1, -0.1}}), Matrix::from_rows({{1, 0}, {0, 1}}));
  EXPECT_EQ(h, std::vector<std::size_t>{0});
}

TEST(RetrieveTopTags, TiesGoToLowestIndex) {
  const auto h = retrieve_top_tags(Matrix::from_rows({{1, 1}}), Matrix::from_rows({{0, 1}, {1, 0}}));
  EXPECT_EQ(h, std::vector<std::size_t>{0});
}

TEST(RetrieveTopTags, MatchesExhaustiveArgmax) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    const Matrix v = gaussian(5, 6, rng);
    const Matrix tags = gaussian(8, 6, rng);
    const auto h = retrieve_top_tags(v, tags);
    const auto expected = oracle::retrieve(rows(v), rows(tags));
    EXPECT_EQ(std::set<std::size_t>(h.begin(), h.end()), expected);
    EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
  }
}

TEST(Select, SetAlgebraThenCyclicOversampling) {
  // a=0 b=1 c=2 d=3
  const std::vector<std::size_t> wp{0, 1}, wn{2, 3}, h{1, 2};
  const Selection s = select(wp, wn, h);
  EXPECT_EQ(s.positives, (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(s.negatives, (std::vector<std::size_t>{3, 3}));
  EXPECT_FALSE(s.positive_fallback);
  EXPECT_FALSE(s.negative_fallback);
}

TEST(Select, DisjointRetrievalKeepsPositivesByFallback) {
  const std::vector<std::size_t> wp{0, 1}, wn{2, 3}, h{7};
  const Selection s = select(wp, wn, h);
  EXPECT_EQ(s.positives, wp);
  EXPECT_EQ(s.negatives, wn);
  EXPECT_TRUE(s.positive_fallback);
  EXPECT_FALSE(s.negative_fallback);
}

TEST(Select, AllNegativesRetrievedFallsBackToLowestScore) {
  const std::vector<std::size_t> wp{0, 1, 2}, wn{3, 4, 5}, h{0, 3, 4, 5};
  const Selection ranked = select(wp, wn, h);  // no scores: last negative is lowest
  EXPECT_EQ(ranked.negatives, (std::vector<std::size_t>{5, 5, 5}));
  EXPECT_TRUE(ranked.negative_fallback);
  const std::vector<double> scores{0.2, -0.4, 0.1};
  const Selection scored = select(wp, wn, h, scores);
  EXPECT_EQ(scored.negatives, (std::vector<std::size_t>{4, 4, 4}));
  EXPECT_EQ(scored.positives, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(Reweight, AlignedRegionWithHalfScore) {
  const Reweighting r = reweight(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{3, 0}, {0, 1}}),
                                 Vector{0.5}, false);
  EXPECT_NEAR(r.q[0], std::exp(1.0) * 0.5, 1e-15);
  EXPECT_NEAR(r.q[0], 1.359141, 1e-6);
}

TEST(Reweight, OrthogonalBestRegionUnitScore) {
  const Reweighting r = reweight(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{0, 1}, {0, -1}}),
                                 Vector{1.0}, false);
  EXPECT_NEAR(r.q[0], 1.0, 1e-15);
}

TEST(Reweight, NormalizedMeanIsOne) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t K = 1 + rng() % 6;
    Vector g(K);
    for (double& x : g) x = u(rng);
    const Reweighting r = reweight(gaussian(K, 5, rng), gaussian(1 + rng() % 5, 5, rng), g);
    double mean = 0.0;
    for (double x : r.q) {
      EXPECT_GT(x, 0.0);
      mean += x;
    }
    EXPECT_NEAR(mean / double(K), 1.0, 1e-12);
  }
}

TEST(Reweight, ClampsNonPositiveGlobalScores) {
  const Reweighting r = reweight(Matrix::from_rows({{1, 0}, {0, 1}}), Matrix::from_rows({{1, 0}}),
                                 Vector{-0.3, 0.0}, false);
  EXPECT_EQ(r.clamped, 2u);
  EXPECT_NEAR(r.q[0], std::exp(1.0) * kMinGlobalScore, 1e-18);
  EXPECT_NEAR(r.q[1], kMinGlobalScore, 1e-18);
}

TEST(Reweight, InvariantToDuplicatedRegion) {
  std::mt19937_64 rng(33);
  const Matrix p = gaussian(3, 4, rng);
  const Matrix v = gaussian(3, 4, rng);
  const Vector g{0.2, 0.5, 0.9};
  Matrix dup = v;
  dup.append_row(v.row(1));
  EXPECT_EQ(reweight(p, v, g).q, reweight(p, dup, g).q);
}

TEST(ApplyUasr, NoOpWhenPositivesCorroboratedAndNegativesUnseen) {
  // Each region is one positive tag; negatives point elsewhere.
  ContrastiveInstance inst;
  inst.regions = Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}});
  inst.positives = Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}});
  inst.negatives = Matrix::from_rows({{0, 0, 1, 0}, {0, 0, 0, 1}});
  inst.caption_nouns = Matrix(0, 4);
  inst.global_scores = {0.6, 0.4};
  const UasrResult u = apply_uasr(inst);
  EXPECT_EQ(u.positives_filtered, inst.positives);
  EXPECT_EQ(u.negatives_filtered, inst.negatives);
  EXPECT_EQ(u.retrieved_set, (std::vector<std::size_t>{0, 1}));
  // Both best cosines are 1 so q is proportional to the global scores.
  EXPECT_NEAR(u.weights[0], 1.2, 1e-12);
  EXPECT_NEAR(u.weights[1], 0.8, 1e-12);
}

TEST(ApplyUasr, PlantedFalseNegativeIsRemoved) {
  ContrastiveInstance inst = random_instance(34, 8, 4, 3, 0);
  for (std::size_t c = 0; c < 8; ++c) inst.negatives(1, c) = inst.regions(2, c);
  const UasrResult u = apply_uasr(inst);
  EXPECT_TRUE(std::count(u.retrieved_set.begin(), u.retrieved_set.end(), 3 + 1));
  EXPECT_EQ(std::count(u.negative_sources.begin(), u.negative_sources.end(), 1u), 0);
}

TEST(ApplyUasr, MatchesScriptedOracle) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 200; ++t) {
    const ContrastiveInstance inst = random_instance(rng(), 8, 6, 4, 0);
    const UasrResult u = apply_uasr(inst);
    const auto expected = oracle::uasr(rows(inst.regions), rows(inst.positives), rows(inst.negatives),
                                       inst.global_scores, inst.negative_scores);
    EXPECT_EQ(u.positive_sources, expected.pos);
    EXPECT_EQ(u.negative_sources, expected.neg);
    ASSERT_EQ(u.weights.size(), expected.q.size());
    for (std::size_t n = 0; n < expected.q.size(); ++n) EXPECT_NEAR(u.weights[n], expected.q[n], 1e-12);
    EXPECT_EQ(u.positives_filtered, gather_rows(inst.positives, u.positive_sources));
  }
}

TEST(ApplyUasr, SetInvariants) {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 500; ++t) {
    const std::size_t K = 1 + rng() % 5;
    const ContrastiveInstance inst = random_instance(rng(), 4 + rng() % 8, 1 + rng() % 6, K, 0);
    const UasrResult u = apply_uasr(inst);
    ASSERT_EQ(u.positive_sources.size(), K);
    ASSERT_EQ(u.negative_sources.size(), K);
    EXPECT_EQ(u.positives_filtered.rows(), K);
    EXPECT_EQ(u.negatives_filtered.rows(), K);
    const std::set<std::size_t> h(u.retrieved_set.begin(), u.retrieved_set.end());
    for (std::size_t n : u.positive_sources) EXPECT_TRUE(h.count(n) || u.positive_fallback);
    for (std::size_t n : u.negative_sources) EXPECT_TRUE(!h.count(K + n) || u.negative_fallback);
    for (double q : u.weights) EXPECT_TRUE(q > 0.0 && std::isfinite(q));
  }
}

TEST(IdentitySelection, UnitWeightsOriginalSets) {
  const ContrastiveInstance inst = random_instance(37, 4, 2, 3, 1);
  const UasrResult u = identity_selection(inst);
  EXPECT_EQ(u.weights, Vector(3, 1.0));
  EXPECT_EQ(u.positive_sources, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(u.negatives_filtered, inst.negatives);
}

}  // namespace
}  // namespace rca
