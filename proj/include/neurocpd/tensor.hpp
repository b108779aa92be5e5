#pragma once

// Dense tensors, column-major matrices, Kruskal models and the multilinear
// kernels the solvers are built on.
//
// Linearization is first-index-fastest everywhere. Mode indices in this API
// are zero-based. The mode-n unfolding orders its columns so that
//   X_(0) = A (C kr B)^T,  X_(1) = B (C kr A)^T,  X_(2) = C (B kr A)^T
// holds for X = [[A, B, C]], where `kr` is the Khatri-Rao product.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace neurocpd {

/// Column-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Row-wise literal, e.g. Matrix::from_rows({{1, 2}, {3, 4}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i + j * rows_]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C = A B
Matrix multiply(const Matrix& a, const Matrix& b);
/// A^T A
Matrix gram(const Matrix& a);
/// Entrywise product of equally sized matrices.
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Order-N dense array, first index fastest.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape, double fill = 0.0);
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

  std::size_t order() const noexcept { return shape_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Linear offset of a full multi-index.
  std::size_t offset(std::span<const std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Factor matrices of a rank-R CP model; factor n is I_n x R.
class KruskalModel {
 public:
  KruskalModel() = default;
  explicit KruskalModel(std::vector<Matrix> factors);
  /// Zero-filled model for the given dimensions.
  KruskalModel(std::span<const std::size_t> dims, std::size_t rank);

  std::size_t order() const noexcept { return factors_.size(); }
  std::size_t rank() const noexcept { return factors_.empty() ? 0 : factors_.front().cols(); }
  std::vector<std::size_t> dims() const;

  Matrix& factor(std::size_t n) { return factors_.at(n); }
  const Matrix& factor(std::size_t n) const { return factors_.at(n); }
  std::vector<Matrix>& factors() noexcept { return factors_; }
  const std::vector<Matrix>& factors() const noexcept { return factors_; }

  /// Total number of factor entries.
  std::size_t num_parameters() const noexcept;
  bool is_nonnegative() const noexcept;

  friend bool operator==(const KruskalModel&, const KruskalModel&) = default;

 private:
  std::vector<Matrix> factors_;
};

/// Concatenation of all factor entries (factor 0 first, each column-major).
std::vector<double> flatten(const KruskalModel& model);
/// Inverse of flatten() for the given dimensions and rank.
KruskalModel unflatten(std::span<const double> flat, std::span<const std::size_t> dims,
                       std::size_t rank);

/// Mode-n unfolding X_(n), I_n x prod_{m != n} I_m.
Matrix unfold(const DenseTensor& t, std::size_t mode);
/// Inverse of unfold() for the given shape.
DenseTensor fold(const Matrix& m, std::span<const std::size_t> shape, std::size_t mode);

/// Column-wise Kronecker product: column r is kron(a_r, b_r) (b index fastest).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Entrywise product of all factor Grams except `skip`, i.e. K^T K where K is
/// the Khatri-Rao product of the remaining factors.
Matrix hadamard_gram(const KruskalModel& model, std::size_t skip);

/// X_(mode) times the Khatri-Rao product of the remaining factors (highest
/// mode first), without forming that product.
Matrix mttkrp(const DenseTensor& t, const KruskalModel& model, std::size_t mode);

/// Column `r` of mttkrp(t, model, mode), computed on its own.
std::vector<double> mttkrp_column(const DenseTensor& t, const KruskalModel& model, std::size_t mode,
                                  std::size_t r);

/// Dense tensor sum_r a_r o b_r o c_r (any order).
DenseTensor kruskal_full(const KruskalModel& model);

double frobenius_norm(const DenseTensor& t);
double frobenius_norm_sq(const DenseTensor& t);

/// ||X - [[model]]||_F / ||X||_F; throws DomainError when ||X||_F = 0.
double relative_error(const DenseTensor& t, const KruskalModel& model);

/// Throws ShapeError unless the model's factor dimensions match the tensor.
void check_compatible(const DenseTensor& t, const KruskalModel& model);

}  // namespace neurocpd
