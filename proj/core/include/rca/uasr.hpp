#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rca/core_model.hpp"
#include "rca/matrix.hpp"

namespace rca {

/// Floor applied to non-positive global scores so a weight never flips the
/// sign of its loss term.
inline constexpr double kMinGlobalScore = 1e-6;

/// Cosine between a region and a tag. Throws DegenerateEmbeddingError on a
/// zero-norm input.
double local_uncertainty(std::span<const double> region, std::span<const double> tag);

/// For each region, the index of the tag with the highest cosine (lowest
/// index on ties). Returns the de-duplicated winners in ascending order.
std::vector<std::size_t> retrieve_top_tags(const Matrix& regions, const Matrix& tags);

struct Selection {
  std::vector<std::size_t> positives;  // |positives| == K, repeats from oversampling
  std::vector<std::size_t> negatives;  // |negatives| == K
  bool positive_fallback = false;
  bool negative_fallback = false;
};

/// Keeps positives present in `retrieved` and drops negatives present in it,
/// then cycles each survivor list until it regains K entries. Ids are opaque
/// (whatever space `retrieved` uses). Fallbacks: no corroborated positive
/// keeps every original positive; no surviving negative keeps the negative
/// with the lowest score (the last one when `negative_scores` is empty).
Selection select(std::span<const std::size_t> positive_ids, std::span<const std::size_t> negative_ids,
                 std::span<const std::size_t> retrieved, std::span<const double> negative_scores = {});

struct Reweighting {
  Vector q;
  std::size_t clamped = 0;  // global scores raised to kMinGlobalScore
};

/// q[n] = exp(max_i cos(regions[i], positives[n])) * global_scores[n],
/// optionally rescaled so mean(q) == 1.
Reweighting reweight(const Matrix& positives, const Matrix& regions,
                     std::span<const double> global_scores, bool normalize = true);

struct UasrOptions {
  bool normalize_weights = true;
};

/// Filtered tag sets and per-positive weights for one instance. Source index
/// vectors point into instance.positives / instance.negatives so the losses
/// can be re-evaluated (and differentiated) against the original rows.
struct UasrResult {
  Matrix positives_filtered;
  Matrix negatives_filtered;
  Vector weights;
  std::vector<std::size_t> retrieved_set;  // indices into [positives; negatives]
  std::vector<std::size_t> positive_sources;
  std::vector<std::size_t> negative_sources;
  bool positive_fallback = false;
  bool negative_fallback = false;
  std::size_t clamped_weights = 0;
};

UasrResult apply_uasr(const ContrastiveInstance& instance, const UasrOptions& options = {});

/// Pass-through result used when selection/reweighting is disabled: original
/// sets, unit weights.
UasrResult identity_selection(const ContrastiveInstance& instance);

}  // namespace rca
