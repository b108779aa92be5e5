#pragma once

// Continuous-time projection neural network for nonnegative CPD
//
//   eps_n dA_n/dt = -A_n + [A_n - grad_n F * P_n^{-1}]_+
//
// and the log-barrier preconditioned gradient flow
//
//   eps_n dA_n/dt = -H~_n^{-1} grad_n F~
//
// integrated with fixed-step explicit Euler (RK4 optional for the barrier
// flow). With 0 < h <= eps_n every projected Euler step is a convex
// combination of nonnegative points, so iterates stay in the orthant.

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "neurocpd/objective.hpp"
#include "neurocpd/tensor.hpp"

namespace neurocpd {

struct FlowState {
  KruskalModel model;
  std::vector<double> time_constants;  // eps_n, one per factor
  double step = 0.5;                   // h
  bool precondition = true;
  std::optional<double> ridge;  // default_ridge() when empty
  double residual = std::numeric_limits<double>::infinity();
  std::size_t steps = 0;

  /// eps_n = 1 for every factor, h = 0.5 * min eps.
  static FlowState with_defaults(KruskalModel model);
};

enum class Integrator { euler, rk4 };

/// Right-hand side of the projection flow for one factor, i.e. eps_n dA_n/dt.
Matrix flow_rhs(const DenseTensor& t, const FlowState& s, std::size_t mode);

/// One explicit Euler step of all factors from the same snapshot. Sets
/// `residual` to the max-norm of the right-hand sides at the starting point.
/// Throws DomainError when h > min eps and DivergenceError on non-finite values.
FlowState flow_step(const DenseTensor& t, FlowState s);

/// One step of the barrier flow. A step that would leave the open orthant is
/// halved (up to `max_halvings` times, then StallError).
FlowState barrier_flow_step(const DenseTensor& t, FlowState s, const BarrierParams& bp,
                            Integrator integrator = Integrator::euler, int max_halvings = 30);

/// Barrier-flow right-hand side for one factor, eps_n dA_n/dt.
Matrix barrier_flow_rhs(const DenseTensor& t, const FlowState& s, std::size_t mode,
                        const BarrierParams& bp);

struct EquilibriumResult {
  FlowState state;
  std::size_t steps = 0;
  bool converged = false;  // residual < tol, otherwise max_steps was reached
};

/// Sees the state after every step; returning false stops the integration.
using FlowObserver = std::function<bool(const FlowState&)>;

/// Integrates the projection flow until max-norm of every right-hand side is
/// below `tol` or `max_steps` steps were taken.
EquilibriumResult solve_to_equilibrium(const DenseTensor& t, FlowState s, double tol,
                                       std::size_t max_steps, const FlowObserver& observer = {});

/// Barrier-flow analogue of solve_to_equilibrium. `decay_every` > 0 multiplies
/// gamma by `decay_factor` every that many steps.
EquilibriumResult solve_barrier_flow(const DenseTensor& t, FlowState s, BarrierParams bp,
                                     double tol, std::size_t max_steps,
                                     Integrator integrator = Integrator::euler,
                                     std::size_t decay_every = 0, double decay_factor = 0.5,
                                     const FlowObserver& observer = {});

/// Per-factor KKT residual max|A_n - [A_n - grad_n F]_+| (unpreconditioned).
std::vector<double> kkt_residuals(const DenseTensor& t, const KruskalModel& model);

}  // namespace neurocpd
