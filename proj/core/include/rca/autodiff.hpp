#pragma once

#include <functional>
#include <span>
#include <string>

#include "rca/core_model.hpp"
#include "rca/losses.hpp"
#include "rca/matrix.hpp"
#include "rca/uasr.hpp"

namespace rca {

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;

/// Gradient of total_loss w.r.t. every embedding of an instance. Shapes
/// mirror the instance (d_positives is K x d over the *original* positives;
/// rows repeated by oversampling accumulate).
struct GradientBundle {
  Matrix d_regions;
  Matrix d_positives;
  Matrix d_negatives;
  Matrix d_caption;
  double loss = 0.0;
};

/// Upstream dL/dphi for a tag set is pushed back through the attention
/// pooling onto the tags and the contexts.
void backprop_compatibility(const Matrix& tags, const Matrix& contexts, std::span<const double> d_phi,
                            Matrix& d_tags, Matrix& d_contexts);

/// Analytic gradient. UASR selection and weights are held fixed.
GradientBundle loss_and_grad(const ContrastiveInstance& instance, const UasrResult& uasr,
                             const LossWeights& weights = {});

/// Central differences of `f` at `x`, one coordinate at a time.
Vector central_difference(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x, double h = kDefaultFiniteDifferenceStep);

/// Central differences of total_loss. Shares no code with loss_and_grad's
/// backward pass. h must lie in [1e-7, 1e-3].
GradientBundle finite_diff_grad(const ContrastiveInstance& instance, const UasrResult& uasr,
                                const LossWeights& weights = {},
                                double h = kDefaultFiniteDifferenceStep);

/// Denominator floor used by relative_error; below it the comparison is
/// effectively absolute.
inline constexpr double kRelativeErrorFloor = 1e-4;

/// |a - b| / max(|a|, |b|, kRelativeErrorFloor)
double relative_error(double a, double b) noexcept;

struct TensorDiscrepancy {
  std::string tensor;
  double max_relative_error = 0.0;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradientComparison {
  TensorDiscrepancy regions{"regions"};
  TensorDiscrepancy positives{"positives"};
  TensorDiscrepancy negatives{"negatives"};
  TensorDiscrepancy caption{"caption"};

  const TensorDiscrepancy& worst() const noexcept;
  double max_relative_error() const noexcept { return worst().max_relative_error; }
};

GradientComparison compare_gradients(const GradientBundle& analytic, const GradientBundle& numeric);

}  // namespace rca
