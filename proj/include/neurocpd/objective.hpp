#pragma once

// The nonnegative CPD least-squares problem
//
//   F(A, B, C) = 1/2 ||X - [[A, B, C]]||_F^2
//
// its block gradients, the Gram-structured block Hessians used as
// preconditioners, and the log-barrier variant
//
//   F~ = F - gamma * sum(log(entries)).
//
// All functions accept models of any order matching the tensor.

#include <cstddef>
#include <optional>
#include <vector>

#include "neurocpd/tensor.hpp"

namespace neurocpd {

struct ObjectiveEval {
  double value = 0.0;
  std::vector<Matrix> grads;  // one per factor, sized like the factor
};

/// Block Hessian factor P (R x R) of one mode plus a ridge delta. The full
/// block Hessian is (P + delta I) kron I_{I_n}.
struct Preconditioner {
  std::size_t mode = 0;
  Matrix gram;
  double ridge = 0.0;
};

struct BarrierParams {
  double gamma = 1e-3;
};

/// F via the expanded form 1/2||X||^2 + 1/2 sum(*_n A_n^T A_n) - <X_(0), A (..)^T>.
/// Clamped at zero.
double objective(const DenseTensor& t, const KruskalModel& model);
/// Same, reusing a precomputed ||X||_F^2.
double objective(const DenseTensor& t, const KruskalModel& model, double norm_sq);

/// F evaluated directly as 1/2 ||X - full(model)||^2. Slower, but keeps full
/// relative accuracy near an exact fit.
double objective_direct(const DenseTensor& t, const KruskalModel& model);

/// grad_n F = A_n * hadamard_gram(n) - mttkrp(n).
Matrix gradient(const DenseTensor& t, const KruskalModel& model, std::size_t mode);

ObjectiveEval evaluate(const DenseTensor& t, const KruskalModel& model);

/// Default ridge 1e-10 * trace(P) / R.
double default_ridge(const Matrix& gram);

/// Preconditioner for `mode` at the current model. When `ridge` is empty the
/// default ridge is used.
Preconditioner make_preconditioner(const KruskalModel& model, std::size_t mode,
                                   std::optional<double> ridge = std::nullopt);

/// grad * (P + delta I)^{-1}, computed by an R x R symmetric solve.
/// Throws SingularSystemError (naming the mode) when delta = 0 and P is
/// singular; with delta > 0 a failed Cholesky falls back to a least-squares
/// pseudo-solve.
Matrix precondition(const Matrix& grad, const Preconditioner& p);

/// F - gamma * sum(log(entries)); every entry must be > 0 (DomainError).
double barrier_objective(const DenseTensor& t, const KruskalModel& model, const BarrierParams& bp);

/// grad_n F - gamma / A_n (entrywise).
Matrix barrier_gradient(const DenseTensor& t, const KruskalModel& model, std::size_t mode,
                        const BarrierParams& bp);

/// Applies the inverse of the barrier block Hessian
///   (P + delta I) kron I + gamma diag(1 / a^2)
/// to vec(grad). The system decouples into one R x R solve per factor row:
///   (P + delta I + gamma diag(1 / row^2)) y = grad_row.
/// Throws SingularSystemError carrying the row index when a row system fails.
Matrix barrier_precondition(const Matrix& grad, const Preconditioner& p, const Matrix& entries,
                            const BarrierParams& bp);

}  // namespace neurocpd
