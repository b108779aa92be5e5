#pragma once

// Collaborative neurodynamic optimization: q neurodynamic solvers (particles)
// run to approximate equilibria, exchange personal/global bests through a
// particle-swarm update, and are perturbed by a wavelet mutation when the
// swarm's diversity collapses.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurocpd/dtpnn.hpp"
#include "neurocpd/random.hpp"
#include "neurocpd/tensor.hpp"

namespace neurocpd {

enum class InnerSolver { flow, dtpnn_explicit, dtpnn_armijo, dtpnn_semi_implicit };

std::string_view inner_solver_name(InnerSolver s) noexcept;

struct InnerConfig {
  InnerSolver kind = InnerSolver::flow;
  double tol = 1e-6;
  std::size_t max_steps = 500;
  bool precondition = true;
  std::optional<double> ridge;
  // flow
  double epsilon = 1.0;         // base time constant, shared by all factors
  double step = 0.5;            // h; must not exceed the smallest epsilon in use
  bool jitter_epsilon = false;  // particles other than 0 draw epsilon uniformly in [0.5, 2] * base
  // dtpnn
  double lambda = 1.0;
  double armijo_alpha = 1e-4;
  double armijo_beta = 0.5;
  SemiImplicitForm form = SemiImplicitForm::corrected;
};

struct SwarmConfig {
  std::size_t q = 5;
  double alpha = 0.5;   // inertia
  double beta1 = 0.01;  // personal-best attraction
  double beta2 = 0.01;  // global-best attraction
  double diversity_threshold = 1e-3;
  double epsilon_stop = 0.0;  // stop when |f_best(k) - f_best(k-1)| < epsilon_stop; 0 disables
  std::size_t k_max = 20;
  std::uint64_t seed = 0;
  bool mutation = true;
  std::size_t threads = 1;
  std::size_t rank = 1;
  bool record_bests = false;  // copy personal/global bests into every SwarmIteration
  InnerConfig inner;
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> personal_best;
  double personal_best_value = std::numeric_limits<double>::infinity();
  double epsilon = 1.0;  // time constant of this particle's flow
};

struct SwarmState {
  std::vector<Particle> particles;
  std::vector<double> global_best;
  double global_best_value = std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  std::size_t k = 0;
  double diversity = 0.0;
};

/// Attraction weights (gamma1, gamma2) of one particle for one update.
struct PsoDraw {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

/// v <- alpha v + beta1 g1 (p_n - x) + beta2 g2 (p_best - x); x <- max(0, x + v).
SwarmState pso_update(SwarmState sw, const SwarmConfig& cfg, std::span<const PsoDraw> draws);
/// Same with (gamma1, gamma2) drawn uniformly in [0, 1) from each particle's stream for sw.k.
SwarmState pso_update(SwarmState sw, const SwarmConfig& cfg);

/// Replaces p_n by the current position iff values[n] < personal_best_value
/// (strict), then sets the global best to the smallest personal best. On
/// ties the lowest particle index wins, and the incumbent global best is only
/// replaced by a strictly smaller value.
SwarmState update_bests(SwarmState sw, std::span<const double> values);

/// DI = (1/q) sum_n ||p_n - p_best||_2
double diversity(const SwarmState& sw);

/// kappa(phi) = exp(-phi / (2a)) cos(5 phi / a) / sqrt(a)
double wavelet(double phi, double a) noexcept;
/// a = exp(10 k / k_max)
double wavelet_dilation(std::size_t k, std::size_t k_max) noexcept;

/// Per-coordinate bounds used by mutation: l = 0 and u = 2 * max entry of the
/// global best within each factor block (block sizes in flatten() order).
std::vector<double> mutation_upper_bounds(const SwarmState& sw, std::span<const std::size_t> block_sizes);

/// Mutates every coordinate of every particle except the global-best owner:
///   kappa > 0:  x <- x + kappa (u - x),   kappa <= 0:  x <- x + kappa (x - l)
/// clamped to [l, u]; mutated coordinates get zero velocity.
SwarmState wavelet_mutation(SwarmState sw, const SwarmConfig& cfg, std::size_t k, std::size_t k_max,
                            std::span<const std::size_t> block_sizes);

struct SwarmIteration {
  std::size_t k = 0;                  // 1-based outer iteration
  std::vector<double> values;         // objective of each particle after its inner solve
  double best_value = 0.0;            // global best after update_bests
  double diversity = 0.0;             // DI after update_bests
  bool mutated = false;               // wavelet mutation applied this iteration
  std::size_t inner_steps = 0;        // summed over particles
  std::size_t reseeded = 0;           // particles restarted after an inner failure
  // Filled only with SwarmConfig::record_bests, as seen by update_bests.
  std::vector<std::vector<double>> personal_bests;
  std::vector<double> personal_best_values;
  std::vector<double> global_best;
};

struct CnoResult {
  KruskalModel best;
  double best_value = 0.0;
  std::vector<SwarmIteration> trace;
  std::string termination;  // "k_max", "epsilon_stop" or "observer"
};

/// Called after every outer iteration; returning false ends the run.
using CnoObserver = std::function<bool(const SwarmIteration&, const KruskalModel& best)>;

/// Solve -> update bests -> diversity -> PSO -> mutation (if DI < delta),
/// repeated for k_max outer iterations. Particle n starts from
/// random_init(t, rank, make_rng(seed, n)).
CnoResult cno_run(const DenseTensor& t, const SwarmConfig& cfg, const CnoObserver& observer = {});

/// The inner solver alone, from `start`; used by cno_run and the bench runner.
struct InnerResult {
  KruskalModel model;
  std::size_t steps = 0;
  bool converged = false;
};
InnerResult solve_inner(const DenseTensor& t, KruskalModel start, const InnerConfig& cfg, double epsilon);

/// Initial model of particle n (also used by single-solver runs with n = 0).
KruskalModel initial_model(const DenseTensor& t, std::size_t rank, std::uint64_t seed, std::size_t n);

}  // namespace neurocpd
