#include "rca/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rca/errors.hpp"

namespace rca {
namespace {

void check_shapes(const Matrix& contexts, const Matrix& positives, const Matrix& negatives) {
  if (positives.rows() == 0) throw EmptyInputError("loss needs at least one positive tag");
  if (negatives.rows() != positives.rows()) {
    throw DimensionError("loss: " + std::to_string(positives.rows()) + " positives vs " +
                         std::to_string(negatives.rows()) + " negatives");
  }
  if (contexts.cols() != positives.cols() || negatives.cols() != positives.cols()) {
    throw DimensionError("loss: contexts and tags do not share a dimension");
  }
}

void check_weights(std::span<const double> q, std::size_t K) {
  if (q.size() != K) {
    throw DimensionError("loss: " + std::to_string(q.size()) + " weights for " + std::to_string(K) +
                         " positives");
  }
  for (double w : q) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InvalidWeightError("loss weight must be positive and finite, got " + std::to_string(w));
    }
  }
}

double contrastive(const Matrix& contexts, const Matrix& positives, const Matrix& negatives,
                   std::span<const double> q) {
  const Vector nll = relative_nll(compatibility(positives, contexts), compatibility(negatives, contexts));
  double sum = 0.0;
  for (std::size_t n = 0; n < nll.size(); ++n) sum += (q.empty() ? 1.0 : q[n]) * nll[n];
  return sum / static_cast<double>(nll.size());
}

}  // namespace

Vector relative_nll(std::span<const double> phi_positive, std::span<const double> phi_negative) {
  double neg_peak = -INFINITY;
  for (double v : phi_negative) neg_peak = std::max(neg_peak, v);
  double neg_mass = 0.0;  // sum_l exp(neg[l] - neg_peak)
  for (double v : phi_negative) neg_mass += std::exp(v - neg_peak);

  Vector out(phi_positive.size());
  for (std::size_t n = 0; n < phi_positive.size(); ++n) {
    const double p = phi_positive[n];
    const double peak = std::max(p, neg_peak);
    const double z = std::exp(p - peak) + neg_mass * std::exp(neg_peak - peak);
    // log-sum-exp minus the positive logit; never negative.
    out[n] = std::max(0.0, peak + std::log(z) - p);
  }
  return out;
}

double cross_modality_loss(const Matrix& regions, const Matrix& positives, const Matrix& negatives) {
  check_shapes(regions, positives, negatives);
  return contrastive(regions, positives, negatives, {});
}

double inner_modality_loss(const Matrix& caption_nouns, const Matrix& positives, const Matrix& negatives) {
  if (caption_nouns.rows() == 0) throw EmptyContextError("inner-modality loss with no caption nouns");
  check_shapes(caption_nouns, positives, negatives);
  return contrastive(caption_nouns, positives, negatives, {});
}

double weighted_cross_loss(const Matrix& regions, const Matrix& positives, const Matrix& negatives,
                           std::span<const double> q) {
  check_shapes(regions, positives, negatives);
  check_weights(q, positives.rows());
  return contrastive(regions, positives, negatives, q);
}

double weighted_inner_loss(const Matrix& caption_nouns, const Matrix& positives,
                           const Matrix& negatives, std::span<const double> q) {
  if (caption_nouns.rows() == 0) throw EmptyContextError("inner-modality loss with no caption nouns");
  check_shapes(caption_nouns, positives, negatives);
  check_weights(q, positives.rows());
  return contrastive(caption_nouns, positives, negatives, q);
}

LossBreakdown total_loss(const ContrastiveInstance& instance, const UasrResult& uasr,
                         const LossWeights& weights) {
  const Matrix positives = gather_rows(instance.positives, uasr.positive_sources);
  const Matrix negatives = gather_rows(instance.negatives, uasr.negative_sources);

  LossBreakdown out;
  out.lambda_cross = weights.cross;
  out.lambda_inner = weights.inner;
  out.cross = weighted_cross_loss(instance.regions, positives, negatives, uasr.weights);
  if (weights.inner != 0.0 && instance.caption_nouns.rows() > 0) {
    out.inner = weighted_inner_loss(instance.caption_nouns, positives, negatives, uasr.weights);
  }
  out.total = weights.cross * out.cross + weights.inner * out.inner;
  return out;
}

}  // namespace rca
