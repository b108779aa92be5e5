#include "neurocpd/objective.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <string>

#include "neurocpd/error.hpp"
#include "neurocpd/simd/kernels.hpp"

namespace neurocpd {
namespace {

using EigenMap = Eigen::Map<const Eigen::MatrixXd>;
using EigenMutMap = Eigen::Map<Eigen::MatrixXd>;

EigenMap as_eigen(const Matrix& m) {
  return EigenMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

EigenMutMap as_eigen(Matrix& m) {
  return EigenMutMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                     static_cast<Eigen::Index>(m.cols()));
}

void require_positive(const KruskalModel& model) {
  for (std::size_t n = 0; n < model.order(); ++n)
    for (double v : model.factor(n).data())
      if (!(v > 0.0))
        throw DomainError("log barrier requires strictly positive entries (factor " +
                          std::to_string(n) + ")");
}

}  // namespace

double objective(const DenseTensor& t, const KruskalModel& model, double norm_sq) {
  check_compatible(t, model);
  const auto& k = simd::active();
  const Matrix m0 = mttkrp(t, model, 0);
  const Matrix others = hadamard_gram(model, 0);
  const Matrix g0 = gram(model.factor(0));
  const double model_sq = k.dot(others.data(), g0.data());
  const double inner = k.dot(m0.data(), model.factor(0).data());
  return std::max(0.0, 0.5 * norm_sq + 0.5 * model_sq - inner);
}

double objective(const DenseTensor& t, const KruskalModel& model) {
  return objective(t, model, frobenius_norm_sq(t));
}

double objective_direct(const DenseTensor& t, const KruskalModel& model) {
  check_compatible(t, model);
  const DenseTensor approx = kruskal_full(model);
  return 0.5 * simd::active().sq_dist(t.data(), approx.data());
}

Matrix gradient(const DenseTensor& t, const KruskalModel& model, std::size_t mode) {
  Matrix m = mttkrp(t, model, mode);
  const Matrix p = hadamard_gram(model, mode);
  const Matrix ap = multiply(model.factor(mode), p);
  const auto& k = simd::active();
  // grad = A P - M, written into m.
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = -m.data()[i];
  k.axpy(1.0, ap.data(), m.data());
  return m;
}

ObjectiveEval evaluate(const DenseTensor& t, const KruskalModel& model) {
  ObjectiveEval out;
  out.value = objective(t, model);
  out.grads.reserve(model.order());
  for (std::size_t n = 0; n < model.order(); ++n) out.grads.push_back(gradient(t, model, n));
  return out;
}

double default_ridge(const Matrix& gram) {
  double trace = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i) trace += gram(i, i);
  return gram.rows() == 0 ? 0.0 : 1e-10 * trace / static_cast<double>(gram.rows());
}

Preconditioner make_preconditioner(const KruskalModel& model, std::size_t mode,
                                   std::optional<double> ridge) {
  Preconditioner p;
  p.mode = mode;
  p.gram = hadamard_gram(model, mode);
  p.ridge = ridge.value_or(default_ridge(p.gram));
  if (p.ridge < 0.0) throw DomainError("preconditioner ridge must be nonnegative");
  return p;
}

Matrix precondition(const Matrix& grad, const Preconditioner& p) {
  const std::size_t r = p.gram.rows();
  if (p.gram.cols() != r || grad.cols() != r)
    throw ShapeError("precondition: gradient has " + std::to_string(grad.cols()) +
                     " columns, preconditioner is " + std::to_string(r) + " x " +
                     std::to_string(p.gram.cols()));
  Eigen::MatrixXd system = as_eigen(p.gram);
  system.diagonal().array() += p.ridge;

  Matrix out(grad.rows(), grad.cols());
  auto dst = as_eigen(out);
  const auto rhs = as_eigen(grad).transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) {
    dst = llt.solve(rhs).transpose();
    return out;
  }
  if (p.ridge == 0.0)
    throw SingularSystemError(p.mode, SingularSystemError::npos,
                              "preconditioner for mode " + std::to_string(p.mode) +
                                  " is singular (no ridge)");
  // Rank-deficient even with the ridge: minimum-norm least-squares solve.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(system);
  dst = cod.solve(rhs).transpose();
  return out;
}

double barrier_objective(const DenseTensor& t, const KruskalModel& model, const BarrierParams& bp) {
  require_positive(model);
  double logs = 0.0;
  for (const auto& f : model.factors())
    for (double v : f.data()) logs += std::log(v);
  return objective_direct(t, model) - bp.gamma * logs;
}

Matrix barrier_gradient(const DenseTensor& t, const KruskalModel& model, std::size_t mode,
                        const BarrierParams& bp) {
  require_positive(model);
  Matrix g = gradient(t, model, mode);
  const auto a = model.factor(mode).data();
  auto gd = g.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] -= bp.gamma / a[i];
  return g;
}

Matrix barrier_precondition(const Matrix& grad, const Preconditioner& p, const Matrix& entries,
                            const BarrierParams& bp) {
  const std::size_t r = p.gram.rows();
  if (grad.cols() != r || entries.cols() != r || entries.rows() != grad.rows())
    throw ShapeError("barrier_precondition: shape mismatch");
  if (bp.gamma == 0.0) return precondition(grad, p);

  Eigen::MatrixXd base = as_eigen(p.gram);
  base.diagonal().array() += p.ridge;
  Matrix out(grad.rows(), r);
  Eigen::MatrixXd system(r, r);
  Eigen::VectorXd rhs(r);
  Eigen::LLT<Eigen::MatrixXd> llt(static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    system = base;
    for (std::size_t c = 0; c < r; ++c) {
      const double e = entries(i, c);
      if (!(e > 0.0))
        throw DomainError("barrier_precondition: nonpositive entry in row " + std::to_string(i));
      system(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += bp.gamma / (e * e);
      rhs(static_cast<Eigen::Index>(c)) = grad(i, c);
    }
    llt.compute(system);
    if (llt.info() != Eigen::Success)
      throw SingularSystemError(p.mode, i,
                                "barrier system for mode " + std::to_string(p.mode) + " row " +
                                    std::to_string(i) + " is not positive definite");
    const Eigen::VectorXd y = llt.solve(rhs);
    for (std::size_t c = 0; c < r; ++c) out(i, c) = y(static_cast<Eigen::Index>(c));
  }
  return out;
}

}  // namespace neurocpd
