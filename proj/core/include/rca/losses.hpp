#pragma once

#include <span>

#include "rca/core_model.hpp"
#include "rca/matrix.hpp"
#include "rca/uasr.hpp"

namespace rca {

struct LossWeights {
  double cross = 1.0;
  double inner = 1.0;
};

struct LossBreakdown {
  double cross = 0.0;
  double inner = 0.0;
  double total = 0.0;
  double lambda_cross = 1.0;
  double lambda_inner = 1.0;
};

/// Per-positive negative log-likelihood of a positive against all negatives:
///   nll[n] = log(exp(pos[n]) + sum_l exp(neg[l])) - pos[n]
/// evaluated with log-sum-exp.
Vector relative_nll(std::span<const double> phi_positive, std::span<const double> phi_negative);

/// Mean over positives of nll, each positive contrasted only with the
/// negatives (never with other positives).
double cross_modality_loss(const Matrix& regions, const Matrix& positives, const Matrix& negatives);

/// Same objective with caption nouns as context. Throws EmptyContextError
/// when there are no nouns.
double inner_modality_loss(const Matrix& caption_nouns, const Matrix& positives, const Matrix& negatives);

/// (1/K) sum_n q[n] * nll[n]. Weights must be strictly positive.
double weighted_cross_loss(const Matrix& regions, const Matrix& positives, const Matrix& negatives,
                           std::span<const double> q);
double weighted_inner_loss(const Matrix& caption_nouns, const Matrix& positives,
                           const Matrix& negatives, std::span<const double> q);

/// Weighted cross + inner losses over the UASR-filtered sets. The inner term
/// is 0 when the instance has no caption nouns or lambda_inner is 0.
LossBreakdown total_loss(const ContrastiveInstance& instance, const UasrResult& uasr,
                         const LossWeights& weights = {});

}  // namespace rca
