#include "rca/uasr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rca/errors.hpp"

namespace rca {
namespace {

std::vector<std::size_t> cycle_to(const std::vector<std::size_t>& survivors, std::size_t count) {
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(survivors[i % survivors.size()]);
  return out;
}

bool contains(std::span<const std::size_t> sorted_or_not, std::size_t id) {
  return std::find(sorted_or_not.begin(), sorted_or_not.end(), id) != sorted_or_not.end();
}

}  // namespace

double local_uncertainty(std::span<const double> region, std::span<const double> tag) {
  if (region.size() != tag.size()) throw DimensionError("region and tag dimensions differ");
  const double nr = norm(region);
  const double nt = norm(tag);
  if (nr == 0.0 || nt == 0.0) throw DegenerateEmbeddingError("local_uncertainty of a zero-norm vector");
  return std::clamp(dot(region, tag) / (nr * nt), -1.0, 1.0);
}

std::vector<std::size_t> retrieve_top_tags(const Matrix& regions, const Matrix& tags) {
  if (tags.rows() == 0) throw EmptyInputError("retrieve_top_tags: no tags");
  std::vector<std::size_t> winners;
  for (std::size_t i = 0; i < regions.rows(); ++i) {
    std::size_t best = 0;
    double best_u = local_uncertainty(regions.row(i), tags.row(0));
    for (std::size_t k = 1; k < tags.rows(); ++k) {
      const double u = local_uncertainty(regions.row(i), tags.row(k));
      if (u > best_u) {
        best_u = u;
        best = k;
      }
    }
    winners.push_back(best);
  }
  std::sort(winners.begin(), winners.end());
  winners.erase(std::unique(winners.begin(), winners.end()), winners.end());
  return winners;
}

Selection select(std::span<const std::size_t> positive_ids, std::span<const std::size_t> negative_ids,
                 std::span<const std::size_t> retrieved, std::span<const double> negative_scores) {
  const std::size_t K = positive_ids.size();
  if (negative_ids.size() != K) throw DimensionError("select: positive and negative counts differ");
  if (!negative_scores.empty() && negative_scores.size() != K) {
    throw DimensionError("select: negative_scores length does not match negatives");
  }
  Selection out;
  if (K == 0) return out;

  std::vector<std::size_t> kept_pos;
  for (std::size_t id : positive_ids) {
    if (contains(retrieved, id)) kept_pos.push_back(id);
  }
  std::vector<std::size_t> kept_neg;
  for (std::size_t id : negative_ids) {
    if (!contains(retrieved, id)) kept_neg.push_back(id);
  }

  if (kept_pos.empty()) {
    kept_pos.assign(positive_ids.begin(), positive_ids.end());
    out.positive_fallback = true;
  }
  if (kept_neg.empty()) {
    std::size_t lowest = K - 1;
    if (!negative_scores.empty()) {
      for (std::size_t i = K; i-- > 0;) {
        if (negative_scores[i] < negative_scores[lowest]) lowest = i;
      }
    }
    kept_neg.push_back(negative_ids[lowest]);
    out.negative_fallback = true;
  }

  out.positives = cycle_to(kept_pos, K);
  out.negatives = cycle_to(kept_neg, K);
  return out;
}

Reweighting reweight(const Matrix& positives, const Matrix& regions,
                     std::span<const double> global_scores, bool normalize) {
  if (global_scores.size() != positives.rows()) {
    throw DimensionError("reweight: " + std::to_string(global_scores.size()) + " global scores for " +
                         std::to_string(positives.rows()) + " positives");
  }
  if (regions.rows() == 0) throw EmptyInputError("reweight: no regions");
  Reweighting out;
  out.q.resize(positives.rows());
  for (std::size_t n = 0; n < positives.rows(); ++n) {
    double best = -1.0;
    for (std::size_t i = 0; i < regions.rows(); ++i) {
      best = std::max(best, local_uncertainty(regions.row(i), positives.row(n)));
    }
    double global = global_scores[n];
    if (!(global > 0.0)) {
      global = kMinGlobalScore;
      ++out.clamped;
    }
    out.q[n] = std::exp(best) * global;
  }
  if (normalize && !out.q.empty()) {
    const double mean = std::accumulate(out.q.begin(), out.q.end(), 0.0) / static_cast<double>(out.q.size());
    for (double& v : out.q) v /= mean;
  }
  return out;
}

UasrResult apply_uasr(const ContrastiveInstance& instance, const UasrOptions& options) {
  instance.validate();
  const std::size_t K = instance.K();
  const Matrix pool = vstack(instance.positives, instance.negatives);

  UasrResult result;
  result.retrieved_set = retrieve_top_tags(instance.regions, pool);

  std::vector<std::size_t> pos_ids(K), neg_ids(K);
  std::iota(pos_ids.begin(), pos_ids.end(), std::size_t{0});
  std::iota(neg_ids.begin(), neg_ids.end(), K);
  const Selection sel = select(pos_ids, neg_ids, result.retrieved_set, instance.negative_scores);

  result.positive_sources = sel.positives;
  result.negative_sources.reserve(K);
  for (std::size_t id : sel.negatives) result.negative_sources.push_back(id - K);
  result.positive_fallback = sel.positive_fallback;
  result.negative_fallback = sel.negative_fallback;

  result.positives_filtered = gather_rows(instance.positives, result.positive_sources);
  result.negatives_filtered = gather_rows(instance.negatives, result.negative_sources);

  Vector scores;
  scores.reserve(K);
  for (std::size_t n : result.positive_sources) scores.push_back(instance.global_scores[n]);
  Reweighting w = reweight(result.positives_filtered, instance.regions, scores, options.normalize_weights);
  result.weights = std::move(w.q);
  result.clamped_weights = w.clamped;
  return result;
}

UasrResult identity_selection(const ContrastiveInstance& instance) {
  const std::size_t K = instance.K();
  UasrResult result;
  result.positive_sources.resize(K);
  result.negative_sources.resize(K);
  std::iota(result.positive_sources.begin(), result.positive_sources.end(), std::size_t{0});
  std::iota(result.negative_sources.begin(), result.negative_sources.end(), std::size_t{0});
  result.positives_filtered = instance.positives;
  result.negatives_filtered = instance.negatives;
  result.weights.assign(K, 1.0);
  return result;
}

}  // namespace rca
