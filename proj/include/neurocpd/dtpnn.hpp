#pragma once

// Discrete-time projection neural networks for nonnegative CPD.
//
//   explicit (Jacobi):      x+ = x + lambda (-x + [x - g]_+), all factors from one snapshot
//   Gauss-Seidel + Armijo:  the same map applied block by block, lambda shrunk
//                           by beta until f(x+) - f(x) < alpha lambda g^T (x+ - x)
//   semi-implicit:          x+ = (x + lambda [x - g]_+) / (1 + lambda)
//                           (or the literal variant (x + [x - g]_+) / (1 + lambda))
//
// g is the block gradient, optionally right-multiplied by (P + delta I)^{-1}.
// Also: the per-entry effective step map, the step-size stability interval and
// Lyapunov traces used as post-hoc diagnostics.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurocpd/tensor.hpp"

namespace neurocpd {

enum class SemiImplicitForm { corrected, literal };

struct DtpnnState {
  KruskalModel model;
  std::vector<double> lambdas;  // per factor; initial lambda for Armijo
  double armijo_alpha = 1e-4;
  double armijo_beta = 0.5;
  int max_shrinks = 60;
  double stall_tol = 1e-6;  // a block that cannot decrease is accepted below this residual
  bool precondition = false;
  std::optional<double> ridge;
  SemiImplicitForm form = SemiImplicitForm::corrected;
  bool record_history = true;
  bool record_blocks = false;

  std::size_t iter = 0;
  std::vector<double> objective_history;  // objective after each step
  std::vector<double> block_objectives;   // Armijo: f before the step, then after each block
  std::vector<double> accepted_lambdas;   // Armijo: step accepted per block (0 = block kept)
  std::size_t shrinks = 0;                // Armijo: shrinkages during the last step
  double residual = std::numeric_limits<double>::infinity();  // KKT residual seen by the last step

  /// lambda = 1 for every factor.
  static DtpnnState with_defaults(KruskalModel model);
};

enum class DtpnnMethod { explicit_jacobi, gauss_seidel_armijo, semi_implicit };

std::string_view method_name(DtpnnMethod m) noexcept;

DtpnnState step_explicit(const DenseTensor& t, DtpnnState s);
DtpnnState step_gauss_seidel_armijo(const DenseTensor& t, DtpnnState s);
DtpnnState step_semi_implicit(const DenseTensor& t, DtpnnState s);
DtpnnState step(const DenseTensor& t, DtpnnState s, DtpnnMethod method);

struct DtpnnResult {
  DtpnnState state;
  std::size_t steps = 0;
  bool converged = false;  // max per-factor KKT residual < tol at the final point
};

/// Sees the state after every step; returning false stops the run.
using DtpnnObserver = std::function<bool(const DtpnnState&)>;

/// Iterates `method` until the KKT residual of the current point drops below
/// `tol` or `max_steps` steps were taken.
DtpnnResult run_dtpnn(const DenseTensor& t, DtpnnState s, DtpnnMethod method, double tol,
                      std::size_t max_steps, const DtpnnObserver& observer = {});

/// Per-entry gamma with x_after = x_before - gamma * g for one explicit
/// projected step onto the box [lower, upper]:
///   interior:     gamma = lambda
///   upper clamp:  gamma = lambda (x - upper) / g
///   lower clamp:  gamma = lambda (x - lower) / g
/// Throws DomainError for a clamped entry with zero gradient and Error when
/// the reconstruction misses x_after by more than 1e-12 (relative).
std::vector<double> effective_step_map(std::span<const double> before,
                                       std::span<const double> after, std::span<const double> grad,
                                       double lambda, double lower = 0.0,
                                       double upper = std::numeric_limits<double>::infinity());

/// Factor-wise version; lambdas[n] applies to factor n.
std::vector<Matrix> effective_step_map(const KruskalModel& before, const KruskalModel& after,
                                       const std::vector<Matrix>& grads,
                                       std::span<const double> lambdas, double lower = 0.0,
                                       double upper = std::numeric_limits<double>::infinity());

struct StepBound {
  bool at_equilibrium = false;
  double c = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();  // max(0, 1 - sqrt c)
  double upper = std::numeric_limits<double>::quiet_NaN();  // 1 + sqrt c
  bool feasible() const noexcept { return !at_equilibrium && c >= 0.0; }
  bool contains(double lambda) const noexcept {
    return feasible() && lambda >= lower && lambda <= upper;
  }
  std::string describe() const;
};

/// Builds c from one explicit (unpreconditioned) step at the state:
///   c = (1 - 2 ||gamma * g||^2) / ||x - [x - g]_+||^2  (stacked over factors).
StepBound step_size_bound(const DenseTensor& t, const DtpnnState& s);

/// Bound from the stacked squared norms ||gamma * g||^2 and ||x - [x - g]_+||^2.
StepBound step_bound_from(double gamma_grad_sq, double residual_sq);

/// L_k = ||x_k - x_hat||^2 for each model of a run.
std::vector<double> lyapunov_trace(std::span<const KruskalModel> run, const KruskalModel& equilibrium);

}  // namespace neurocpd
