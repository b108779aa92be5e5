#include "neurocpd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "neurocpd/error.hpp"
#include "neurocpd/simd/kernels.hpp"

namespace neurocpd {
namespace {

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw ShapeError("tensor order must be at least 1");
  for (std::size_t d : shape)
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
}

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order)
    throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                     std::to_string(order));
}

// Advances a multi-index over dims[first..] (first index fastest).
void advance(std::vector<std::size_t>& idx, std::span<const std::size_t> dims, std::size_t first) {
  for (std::size_t k = first; k < dims.size(); ++k) {
    if (++idx[k] < dims[k]) return;
    idx[k] = 0;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.begin()->size();
  Matrix out(m, n);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n) throw ShapeError("ragged matrix literal");
    std::size_t j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("multiply: inner dimensions differ");
  const auto& k = simd::active();
  Matrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t p = 0; p < a.cols(); ++p) k.axpy(b(p, j), a.col(p), out.col(j));
  return out;
}

Matrix gram(const Matrix& a) {
  const auto& k = simd::active();
  const std::size_t r = a.cols();
  Matrix out(r, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i <= j; ++i) out(i, j) = out(j, i) = k.dot(a.col(i), a.col(j));
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("hadamard: shape mismatch");
  Matrix out(a.rows(), a.cols());
  simd::active().hadamard(a.data(), b.data(), out.data());
  return out;
}

// ---------------------------------------------------------------------------
// DenseTensor

DenseTensor::DenseTensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(product(shape_), fill);
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != product(shape_))
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape product " + std::to_string(product(shape_)));
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("index order mismatch");
  std::size_t off = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw ShapeError("index out of range");
    off += index[k] * stride;
    stride *= shape_[k];
  }
  return off;
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

// ---------------------------------------------------------------------------
// KruskalModel

KruskalModel::KruskalModel(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ShapeError("Kruskal model needs at least one factor");
  const std::size_t r = factors_.front().cols();
  if (r == 0) throw ShapeError("Kruskal model rank must be at least 1");
  for (const auto& f : factors_) {
    if (f.cols() != r) throw ShapeError("factor matrices must share the column count");
    if (f.rows() == 0) throw ShapeError("factor matrices must have at least one row");
  }
}

KruskalModel::KruskalModel(std::span<const std::size_t> dims, std::size_t rank) {
  if (dims.empty()) throw ShapeError("Kruskal model needs at least one factor");
  if (rank == 0) throw ShapeError("Kruskal model rank must be at least 1");
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("factor matrices must have at least one row");
    factors_.emplace_back(d, rank);
  }
}

std::vector<std::size_t> KruskalModel::dims() const {
  std::vector<std::size_t> out;
  out.reserve(factors_.size());
  for (const auto& f : factors_) out.push_back(f.rows());
  return out;
}

std::size_t KruskalModel::num_parameters() const noexcept {
  std::size_t n = 0;
  for (const auto& f : factors_) n += f.size();
  return n;
}

bool KruskalModel::is_nonnegative() const noexcept {
  for (const auto& f : factors_)
    for (double v : f.data())
      if (!(v >= 0.0)) return false;
  return true;
}

std::vector<double> flatten(const KruskalModel& model) {
  std::vector<double> out;
  out.reserve(model.num_parameters());
  for (const auto& f : model.factors()) out.insert(out.end(), f.data().begin(), f.data().end());
  return out;
}

KruskalModel unflatten(std::span<const double> flat, std::span<const std::size_t> dims,
                       std::size_t rank) {
  KruskalModel model(dims, rank);
  if (flat.size() != model.num_parameters()) throw ShapeError("unflatten: length mismatch");
  std::size_t pos = 0;
  for (auto& f : model.factors()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), f.size(), f.data().begin());
    pos += f.size();
  }
  return model;
}

void check_compatible(const DenseTensor& t, const KruskalModel& model) {
  if (model.order() != t.order())
    throw ShapeError("model order " + std::to_string(model.order()) + " != tensor order " +
                     std::to_string(t.order()));
  for (std::size_t n = 0; n < t.order(); ++n)
    if (model.factor(n).rows() != t.dim(n))
      throw ShapeError("factor " + std::to_string(n) + " has " +
                       std::to_string(model.factor(n).rows()) + " rows, tensor dimension is " +
                       std::to_string(t.dim(n)));
}

// ---------------------------------------------------------------------------
// Unfolding

Matrix unfold(const DenseTensor& t, std::size_t mode) {
  check_mode(mode, t.order());
  const auto& dims = t.shape();
  const std::size_t rows = dims[mode];
  const std::size_t cols = t.size() / rows;

  // Column stride of every other mode in the unfolding.
  std::vector<std::size_t> stride(dims.size(), 0);
  std::size_t s = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k == mode) continue;
    stride[k] = s;
    s *= dims[k];
  }

  Matrix out(rows, cols);
  std::vector<std::size_t> idx(dims.size(), 0);
  const auto data = t.data();
  for (std::size_t off = 0; off < t.size(); ++off) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) col += idx[k] * stride[k];
    out(idx[mode], col) = data[off];
    advance(idx, dims, 0);
  }
  return out;
}

DenseTensor fold(const Matrix& m, std::span<const std::size_t> shape, std::size_t mode) {
  std::vector<std::size_t> dims(shape.begin(), shape.end());
  DenseTensor out(dims);
  check_mode(mode, dims.size());
  if (m.rows() != dims[mode] || m.cols() * m.rows() != out.size())
    throw ShapeError("fold: matrix shape does not match tensor shape");

  std::vector<std::size_t> stride(dims.size(), 0);
  std::size_t s = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k == mode) continue;
    stride[k] = s;
    s *= dims[k];
  }
  std::vector<std::size_t> idx(dims.size(), 0);
  auto data = out.data();
  for (std::size_t off = 0; off < out.size(); ++off) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) col += idx[k] * stride[k];
    data[off] = m(idx[mode], col);
    advance(idx, dims, 0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Products

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (std::size_t r = 0; r < a.cols(); ++r)
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < b.rows(); ++j) out(j + b.rows() * i, r) = a(i, r) * b(j, r);
  return out;
}

Matrix hadamard_gram(const KruskalModel& model, std::size_t skip) {
  check_mode(skip, model.order());
  const std::size_t r = model.rank();
  Matrix out(r, r, 1.0);
  for (std::size_t n = 0; n < model.order(); ++n) {
    if (n == skip) continue;
    const Matrix g = gram(model.factor(n));
    simd::active().hadamard(out.data(), g.data(), out.data());
  }
  return out;
}

Matrix mttkrp(const DenseTensor& t, const KruskalModel& model, std::size_t mode) {
  check_compatible(t, model);
  check_mode(mode, t.order());
  const auto& k = simd::active();
  const auto& dims = t.shape();
  const std::size_t order = dims.size();
  const std::size_t rank = model.rank();
  const std::size_t fibre_len = dims[0];
  const std::size_t fibres = t.size() / fibre_len;
  const Matrix& first = model.factor(0);

  Matrix out(dims[mode], rank);
  std::vector<double> weight(rank);
  std::vector<std::size_t> idx(order, 0);
  const auto data = t.data();

  // Walk the mode-0 fibres; each contributes a rank-R outer product with the
  // row products of the factors it does not run along.
  for (std::size_t f = 0; f < fibres; ++f) {
    std::fill(weight.begin(), weight.end(), 1.0);
    for (std::size_t n = 1; n < order; ++n) {
      if (n == mode) continue;
      const Matrix& a = model.factor(n);
      for (std::size_t r = 0; r < rank; ++r) weight[r] *= a(idx[n], r);
    }
    const auto fibre = data.subspan(f * fibre_len, fibre_len);
    if (mode == 0) {
      for (std::size_t r = 0; r < rank; ++r) k.axpy(weight[r], fibre, out.col(r));
    } else {
      const std::size_t row = idx[mode];
      for (std::size_t r = 0; r < rank; ++r) out(row, r) += weight[r] * k.dot(fibre, first.col(r));
    }
    advance(idx, dims, 1);
  }
  return out;
}

std::vector<double> mttkrp_column(const DenseTensor& t, const KruskalModel& model, std::size_t mode,
                                  std::size_t r) {
  check_compatible(t, model);
  check_mode(mode, t.order());
  if (r >= model.rank()) throw ShapeError("mttkrp_column: column index out of range");
  const auto& k = simd::active();
  const auto& dims = t.shape();
  const std::size_t order = dims.size();
  const std::size_t fibre_len = dims[0];
  const std::size_t fibres = t.size() / fibre_len;
  const auto first = model.factor(0).col(r);

  std::vector<double> out(dims[mode], 0.0);
  std::vector<std::size_t> idx(order, 0);
  const auto data = t.data();
  for (std::size_t f = 0; f < fibres; ++f) {
    double w = 1.0;
    for (std::size_t n = 1; n < order; ++n)
      if (n != mode) w *= model.factor(n)(idx[n], r);
    const auto fibre = data.subspan(f * fibre_len, fibre_len);
    if (mode == 0)
      k.axpy(w, fibre, out);
    else
      out[idx[mode]] += w * k.dot(fibre, first);
    advance(idx, dims, 1);
  }
  return out;
}

DenseTensor kruskal_full(const KruskalModel& model) {
  if (model.rank() == 0) throw ShapeError("kruskal_full: empty model");
  const auto& k = simd::active();
  const auto dims = model.dims();
  const std::size_t order = dims.size();
  const std::size_t rank = model.rank();
  DenseTensor out(dims);
  const std::size_t fibre_len = dims[0];
  const std::size_t fibres = out.size() / fibre_len;
  const Matrix& first = model.factor(0);

  std::vector<double> weight(rank);
  std::vector<std::size_t> idx(order, 0);
  auto data = out.data();
  for (std::size_t f = 0; f < fibres; ++f) {
    std::fill(weight.begin(), weight.end(), 1.0);
    for (std::size_t n = 1; n < order; ++n) {
      const Matrix& a = model.factor(n);
      for (std::size_t r = 0; r < rank; ++r) weight[r] *= a(idx[n], r);
    }
    auto fibre = data.subspan(f * fibre_len, fibre_len);
    for (std::size_t r = 0; r < rank; ++r) k.axpy(weight[r], first.col(r), fibre);
    advance(idx, dims, 1);
  }
  return out;
}

double frobenius_norm_sq(const DenseTensor& t) { return simd::active().sum_sq(t.data()); }

double frobenius_norm(const DenseTensor& t) { return std::sqrt(frobenius_norm_sq(t)); }

double relative_error(const DenseTensor& t, const KruskalModel& model) {
  check_compatible(t, model);
  const double norm_sq = frobenius_norm_sq(t);
  if (!(norm_sq > 0.0)) throw DomainError("relative_error: tensor has zero Frobenius norm");
  const DenseTensor approx = kruskal_full(model);
  return std::sqrt(simd::active().sq_dist(t.data(), approx.data()) / norm_sq);
}

}  // namespace neurocpd
