#include "rca/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rca/errors.hpp"

namespace rca {
namespace {

// dL/dphi for the positives and negatives of one weighted contrastive term,
// scaled by `scale` (lambda).
void contrastive_phi_grad(std::span<const double> phi_pos, std::span<const double> phi_neg,
                          std::span<const double> q, double scale, Vector& d_pos, Vector& d_neg) {
  const std::size_t K = phi_pos.size();
  const Vector nll = relative_nll(phi_pos, phi_neg);
  d_pos.assign(K, 0.0);
  d_neg.assign(phi_neg.size(), 0.0);
  for (std::size_t n = 0; n < K; ++n) {
    const double coeff = scale * q[n] / static_cast<double>(K);
    const double lse = nll[n] + phi_pos[n];
    d_pos[n] = coeff * (std::exp(phi_pos[n] - lse) - 1.0);
    for (std::size_t l = 0; l < phi_neg.size(); ++l) d_neg[l] += coeff * std::exp(phi_neg[l] - lse);
  }
}

void scatter_rows(const Matrix& grads, std::span<const std::size_t> sources, Matrix& into) {
  for (std::size_t r = 0; r < sources.size(); ++r) {
    auto dst = into.row(sources[r]);
    auto src = grads.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
  }
}

// Accumulates one contrastive term (cross or inner) into the filtered-tag and
// context gradients.
void accumulate_term(const Matrix& contexts, const Matrix& positives, const Matrix& negatives,
                     std::span<const double> q, double scale, Matrix& d_pos, Matrix& d_neg,
                     Matrix& d_contexts) {
  const Vector phi_pos = compatibility(positives, contexts);
  const Vector phi_neg = compatibility(negatives, contexts);
  Vector g_pos, g_neg;
  contrastive_phi_grad(phi_pos, phi_neg, q, scale, g_pos, g_neg);
  backprop_compatibility(positives, contexts, g_pos, d_pos, d_contexts);
  backprop_compatibility(negatives, contexts, g_neg, d_neg, d_contexts);
}

void update_discrepancy(TensorDiscrepancy& t, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("compare_gradients: shape mismatch in " + t.tensor);
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double e = relative_error(a(i, j), b(i, j));
      if (e > t.max_relative_error || !std::isfinite(e)) {
        t.max_relative_error = std::isfinite(e) ? e : INFINITY;
        t.row = i;
        t.col = j;
        t.analytic = a(i, j);
        t.numeric = b(i, j);
      }
    }
  }
}

}  // namespace

void backprop_compatibility(const Matrix& tags, const Matrix& contexts, std::span<const double> d_phi,
                            Matrix& d_tags, Matrix& d_contexts) {
  const std::size_t d = tags.cols();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const Matrix alpha = attention_weights(pairwise_scores(tags, contexts));
  const Matrix pooled = contextualize(alpha, contexts);
  Vector raw(contexts.rows());

  for (std::size_t j = 0; j < tags.rows(); ++j) {
    const double g = d_phi[j];
    if (g == 0.0) continue;
    auto w = tags.row(j);
    const double phi = dot(w, pooled.row(j));
    for (std::size_t k = 0; k < contexts.rows(); ++k) raw[k] = dot(w, contexts.row(k));

    auto dw = d_tags.row(j);
    auto a = pooled.row(j);
    for (std::size_t c = 0; c < d; ++c) dw[c] += g * a[c];

    for (std::size_t k = 0; k < contexts.rows(); ++k) {
      // dphi/ds_jk through the softmax
      const double beta = alpha(j, k) * (raw[k] - phi);
      auto v = contexts.row(k);
      auto dv = d_contexts.row(k);
      const double via_pool = g * (alpha(j, k) + beta * inv_sqrt_d);
      const double via_score = g * beta * inv_sqrt_d;
      for (std::size_t c = 0; c < d; ++c) {
        dw[c] += via_score * v[c];
        dv[c] += via_pool * w[c];
      }
    }
  }
}

GradientBundle loss_and_grad(const ContrastiveInstance& instance, const UasrResult& uasr,
                             const LossWeights& weights) {
  instance.validate();
  const std::size_t K = uasr.positive_sources.size();
  const std::size_t d = instance.dim();
  const Matrix positives = gather_rows(instance.positives, uasr.positive_sources);
  const Matrix negatives = gather_rows(instance.negatives, uasr.negative_sources);

  GradientBundle out;
  out.d_regions = Matrix(instance.regions.rows(), d);
  out.d_positives = Matrix(instance.positives.rows(), d);
  out.d_negatives = Matrix(instance.negatives.rows(), d);
  out.d_caption = Matrix(instance.caption_nouns.rows(), d);
  out.loss = total_loss(instance, uasr, weights).total;

  Matrix d_pos_bar(K, d);
  Matrix d_neg_bar(negatives.rows(), d);
  if (weights.cross != 0.0) {
    accumulate_term(instance.regions, positives, negatives, uasr.weights, weights.cross, d_pos_bar,
                    d_neg_bar, out.d_regions);
  }
  if (weights.inner != 0.0 && instance.caption_nouns.rows() > 0) {
    accumulate_term(instance.caption_nouns, positives, negatives, uasr.weights, weights.inner,
                    d_pos_bar, d_neg_bar, out.d_caption);
  }
  scatter_rows(d_pos_bar, uasr.positive_sources, out.d_positives);
  scatter_rows(d_neg_bar, uasr.negative_sources, out.d_negatives);
  return out;
}

Vector central_difference(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x, double h) {
  Vector point(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

GradientBundle finite_diff_grad(const ContrastiveInstance& instance, const UasrResult& uasr,
                                const LossWeights& weights, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw InvalidInputError("finite-difference step must lie in [1e-7, 1e-3], got " + std::to_string(h));
  }
  ContrastiveInstance probe = instance;

  auto differentiate = [&](Matrix ContrastiveInstance::*member) {
    Matrix& target = probe.*member;
    const Vector base(target.values().begin(), target.values().end());
    auto f = [&](std::span<const double> x) {
      std::copy(x.begin(), x.end(), target.values().begin());
      return total_loss(probe, uasr, weights).total;
    };
    const Vector g = central_difference(f, base, h);
    std::copy(base.begin(), base.end(), target.values().begin());
    Matrix out(target.rows(), target.cols());
    std::copy(g.begin(), g.end(), out.values().begin());
    return out;
  };

  GradientBundle out;
  out.loss = total_loss(instance, uasr, weights).total;
  out.d_regions = differentiate(&ContrastiveInstance::regions);
  out.d_positives = differentiate(&ContrastiveInstance::positives);
  out.d_negatives = differentiate(&ContrastiveInstance::negatives);
  out.d_caption = differentiate(&ContrastiveInstance::caption_nouns);
  return out;
}

double relative_error(double a, double b) noexcept {
  const double denom = std::max({std::abs(a), std::abs(b), kRelativeErrorFloor});
  return std::abs(a - b) / denom;
}

const TensorDiscrepancy& GradientComparison::worst() const noexcept {
  const TensorDiscrepancy* best = &regions;
  for (const TensorDiscrepancy* t : {&positives, &negatives, &caption}) {
    if (t->max_relative_error > best->max_relative_error) best = t;
  }
  return *best;
}

GradientComparison compare_gradients(const GradientBundle& analytic, const GradientBundle& numeric) {
  GradientComparison cmp;
  update_discrepancy(cmp.regions, analytic.d_regions, numeric.d_regions);
  update_discrepancy(cmp.positives, analytic.d_positives, numeric.d_positives);
  update_discrepancy(cmp.negatives, analytic.d_negatives, numeric.d_negatives);
  update_discrepancy(cmp.caption, analytic.d_caption, numeric.d_caption);
  return cmp;
}

}  // namespace rca
