#include "rca/tag_augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rca/errors.hpp"

namespace rca {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine of vectors with lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateEmbeddingError("cosine of a zero-norm vector");
  return dot(a, b) / (na * nb);
}

RankedTagList rank_tags(std::span<const double> image_embedding,
                        std::span<const VocabularyEntry> vocabulary, std::size_t M) {
  if (M == 0 || M % 2 != 0) {
    throw InvalidInputError("M must be a positive even integer, got " + std::to_string(M));
  }
  if (vocabulary.size() < M) {
    throw InsufficientVocabularyError("vocabulary has " + std::to_string(vocabulary.size()) +
                                      " tags, need at least M = " + std::to_string(M));
  }
  if (norm(image_embedding) == 0.0) throw DegenerateEmbeddingError("image embedding has zero norm");

  std::vector<TagCandidate> scored;
  scored.reserve(vocabulary.size());
  for (const auto& entry : vocabulary) {
    if (norm(entry.embedding) == 0.0) {
      throw DegenerateEmbeddingError("tag '" + entry.tag_id + "' has zero norm");
    }
    scored.push_back({entry.tag_id, entry.embedding, cosine_similarity(image_embedding, entry.embedding)});
  }

  auto better = [](const TagCandidate& a, const TagCandidate& b) {
    if (a.global_score != b.global_score) return a.global_score > b.global_score;
    return a.tag_id < b.tag_id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(M), scored.end(), better);
  scored.resize(M);
  return {std::move(scored), M / 2};
}

TagSplit split_pos_neg(const RankedTagList& list) {
  TagSplit split;
  const auto mid = list.candidates.begin() + static_cast<std::ptrdiff_t>(list.K);
  split.positives.assign(list.candidates.begin(), mid);
  split.negatives.assign(mid, mid + static_cast<std::ptrdiff_t>(
                                        std::min(list.K, list.candidates.size() - list.K)));
  return split;
}

std::size_t subsample_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidInputError("subsample fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  if (n == 0) return 0;
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(count, 1, n);
}

SubsampleIndices subsample_indices(std::size_t positive_count, std::size_t negative_count,
                                   double fraction, std::uint64_t seed) {
  // Both sides draw the same count so the loss still sees K against K.
  const std::size_t take =
      std::min(subsample_count(positive_count, fraction), subsample_count(negative_count, fraction));
  std::mt19937_64 rng(seed);
  auto draw = [&](std::size_t n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> out;
    out.reserve(take);
    std::sample(all.begin(), all.end(), std::back_inserter(out), take, rng);
    return out;
  };
  SubsampleIndices result;
  result.positives = draw(positive_count);
  result.negatives = draw(negative_count);
  return result;
}

TagSplit subsample(const TagSplit& split, double fraction, std::uint64_t seed) {
  const auto idx = subsample_indices(split.positives.size(), split.negatives.size(), fraction, seed);
  TagSplit out;
  for (std::size_t i : idx.positives) out.positives.push_back(split.positives[i]);
  for (std::size_t i : idx.negatives) out.negatives.push_back(split.negatives[i]);
  return out;
}

}  // namespace rca
