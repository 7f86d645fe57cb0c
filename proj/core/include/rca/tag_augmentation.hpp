#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rca/matrix.hpp"

namespace rca {

inline constexpr std::size_t kDefaultTagCount = 50;  // M
inline constexpr double kDefaultSubsampleFraction = 0.5;

struct TagCandidate {
  std::string tag_id;
  Embedding embedding;
  double global_score = 0.0;  // cosine with the image embedding

  friend bool operator==(const TagCandidate&, const TagCandidate&) = default;
};

/// Top-M tags for one image, sorted by descending global score with ties
/// broken by ascending tag_id. The first K = M/2 are positives.
struct RankedTagList {
  std::vector<TagCandidate> candidates;
  std::size_t K = 0;
};

struct VocabularyEntry {
  std::string tag_id;
  Embedding embedding;

  friend bool operator==(const VocabularyEntry&, const VocabularyEntry&) = default;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Throws InsufficientVocabularyError if vocabulary.size() < M,
/// DegenerateEmbeddingError on zero-norm vectors, InvalidInputError if M is
/// zero or odd, DimensionError on mismatched lengths.
RankedTagList rank_tags(std::span<const double> image_embedding,
                        std::span<const VocabularyEntry> vocabulary, std::size_t M);

struct TagSplit {
  std::vector<TagCandidate> positives;
  std::vector<TagCandidate> negatives;
};

TagSplit split_pos_neg(const RankedTagList& list);

/// Draws ceil(fraction * n) items uniformly without replacement from each
/// side, preserving relative order. Works on indices so callers can gather
/// whatever payload travels with a tag.
struct SubsampleIndices {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

std::size_t subsample_count(std::size_t n, double fraction);

SubsampleIndices subsample_indices(std::size_t positive_count, std::size_t negative_count,
                                   double fraction, std::uint64_t seed);

TagSplit subsample(const TagSplit& split, double fraction, std::uint64_t seed);

}  // namespace rca
