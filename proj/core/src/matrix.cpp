#include "rca/matrix.hpp"

#include <cmath>
#include <string>

#include "rca/errors.hpp"

namespace rca {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> copy;
  copy.reserve(rows.size());
  for (const auto& r : rows) copy.emplace_back(r);
  return from_rows(copy);
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows, std::size_t cols_if_empty) {
  if (rows.empty()) return Matrix(0, cols_if_empty);
  Matrix m(0, rows.front().size());
  m.data_.reserve(rows.size() * m.cols_);
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty() && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw DimensionError("row of length " + std::to_string(values.size()) +
                         " appended to matrix with " + std::to_string(cols_) + " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> values) noexcept {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> indices) {
  Matrix out(0, source.cols());
  for (std::size_t i : indices) {
    if (i >= source.rows()) {
      throw DimensionError("row index " + std::to_string(i) + " out of range for " +
                           std::to_string(source.rows()) + " rows");
    }
    out.append_row(source.row(i));
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw DimensionError("vstack: column counts " + std::to_string(top.cols()) + " and " +
                         std::to_string(bottom.cols()) + " differ");
  }
  Matrix out(0, top.cols());
  for (std::size_t i = 0; i < top.rows(); ++i) out.append_row(top.row(i));
  for (std::size_t i = 0; i < bottom.rows(); ++i) out.append_row(bottom.row(i));
  return out;
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace rca
