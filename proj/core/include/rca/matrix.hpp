#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rca {

using Vector = std::vector<double>;
using Embedding = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are embeddings (regions, tags,
/// caption words) or score rows; a matrix may have zero rows but still
/// carries its column count.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Throws DimensionError when rows are ragged.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows, std::size_t cols_if_empty = 0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void append_row(std::span<const double> values);
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using EmbeddingMatrix = Matrix;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm(std::span<const double> a) noexcept;
bool all_finite(std::span<const double> values) noexcept;

/// Rows of `source` listed by `indices`, in order (repeats allowed).
Matrix gather_rows(const Matrix& source, std::span<const std::size_t> indices);

/// Stacks `top` over `bottom`; column counts must match.
Matrix vstack(const Matrix& top, const Matrix& bottom);

/// Sum with a fixed pairwise-tree order, independent of thread count.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace rca
