#include "rca/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rca/errors.hpp"

namespace rca {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m.values())) throw InvalidInputError(std::string(what) + " has non-finite entries");
}

}  // namespace

void ContrastiveInstance::validate() const {
  if (regions.rows() == 0) throw EmptyInputError("instance has no regions");
  if (positives.rows() == 0) throw EmptyInputError("instance has no positive tags");
  if (negatives.rows() != positives.rows()) {
    throw DimensionError("positives (" + std::to_string(positives.rows()) + ") and negatives (" +
                         std::to_string(negatives.rows()) + ") differ in count");
  }
  const std::size_t d = regions.cols();
  if (d == 0) throw DimensionError("embedding dimension is zero");
  if (positives.cols() != d || negatives.cols() != d ||
      (caption_nouns.rows() > 0 && caption_nouns.cols() != d)) {
    throw DimensionError("instance matrices do not share dimension " + std::to_string(d));
  }
  if (global_scores.size() != positives.rows()) {
    throw DimensionError("global_scores length " + std::to_string(global_scores.size()) +
                         " != K = " + std::to_string(positives.rows()));
  }
  if (!negative_scores.empty() && negative_scores.size() != negatives.rows()) {
    throw DimensionError("negative_scores length does not match negatives");
  }
  require_finite(regions, "regions");
  require_finite(positives, "positives");
  require_finite(negatives, "negatives");
  require_finite(caption_nouns, "caption_nouns");
  if (!all_finite(global_scores)) throw InvalidInputError("global_scores has non-finite entries");
}

Matrix pairwise_scores(const Matrix& tags, const Matrix& contexts) {
  if (tags.rows() == 0 || contexts.rows() == 0) {
    throw EmptyInputError("pairwise_scores needs at least one tag and one context");
  }
  if (tags.cols() != contexts.cols()) {
    throw DimensionError("pairwise_scores: tag dim " + std::to_string(tags.cols()) +
                         " != context dim " + std::to_string(contexts.cols()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(tags.cols()));
  Matrix out(tags.rows(), contexts.rows());
  for (std::size_t j = 0; j < tags.rows(); ++j) {
    for (std::size_t k = 0; k < contexts.rows(); ++k) {
      out(j, k) = dot(tags.row(j), contexts.row(k)) * scale;
    }
  }
  return out;
}

Matrix attention_weights(const Matrix& scores) {
  require_finite(scores, "scores");
  Matrix alpha(scores.rows(), scores.cols());
  for (std::size_t j = 0; j < scores.rows(); ++j) {
    auto s = scores.row(j);
    auto a = alpha.row(j);
    if (s.empty()) continue;
    const double peak = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      a[k] = std::exp(s[k] - peak);
      z += a[k];
    }
    for (double& v : a) v /= z;
  }
  return alpha;
}

Matrix contextualize(const Matrix& alpha, const Matrix& contexts) {
  if (alpha.cols() != contexts.rows()) {
    throw DimensionError("contextualize: alpha has " + std::to_string(alpha.cols()) +
                         " columns but there are " + std::to_string(contexts.rows()) + " contexts");
  }
  for (std::size_t j = 0; j < alpha.rows(); ++j) {
    double total = 0.0;
    for (double v : alpha.row(j)) total += v;
    if (std::abs(total - 1.0) > 1e-9) {
      throw InvalidInputError("contextualize: attention row " + std::to_string(j) +
                              " sums to " + std::to_string(total));
    }
  }
  Matrix out(alpha.rows(), contexts.cols());
  for (std::size_t j = 0; j < alpha.rows(); ++j) {
    auto dst = out.row(j);
    for (std::size_t k = 0; k < contexts.rows(); ++k) {
      const double w = alpha(j, k);
      auto src = contexts.row(k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Vector compatibility(const Matrix& tags, const Matrix& contexts) {
  const Matrix pooled = contextualize(attention_weights(pairwise_scores(tags, contexts)), contexts);
  Vector phi(tags.rows());
  for (std::size_t j = 0; j < tags.rows(); ++j) phi[j] = dot(tags.row(j), pooled.row(j));
  return phi;
}

}  // namespace rca
