#pragma once

#include <cstddef>
#include <span>

#include "rca/matrix.hpp"

namespace rca {

/// One image's contrastive bundle. Positives and negatives are ranked tags
/// (top-K and next-K); `global_scores[n]` is the image-level relevance of
/// positive n. `negative_scores` is optional; when empty, negatives are
/// assumed to be in descending rank order.
struct ContrastiveInstance {
  Matrix regions;        // R x d
  Matrix positives;      // K x d
  Matrix negatives;      // K x d
  Matrix caption_nouns;  // P x d, P may be 0
  Vector global_scores;  // K
  Vector negative_scores;

  std::size_t dim() const noexcept { return regions.cols(); }
  std::size_t K() const noexcept { return positives.rows(); }

  /// Throws DimensionError / EmptyInputError / InvalidInputError.
  void validate() const;

  friend bool operator==(const ContrastiveInstance&, const ContrastiveInstance&) = default;
};

/// s[j][k] = tags[j] . contexts[k] / sqrt(d)
Matrix pairwise_scores(const Matrix& tags, const Matrix& contexts);

/// Row-wise softmax over the context axis (max-subtracted).
Matrix attention_weights(const Matrix& scores);

/// out[j] = sum_k alpha[j][k] * contexts[k]
Matrix contextualize(const Matrix& alpha, const Matrix& contexts);

/// phi[j] = tags[j] . a_j, where a_j is the attention-pooled context for tag j.
/// Serves both tag-region and tag-caption-noun compatibility.
Vector compatibility(const Matrix& tags, const Matrix& contexts);

}  // namespace rca
