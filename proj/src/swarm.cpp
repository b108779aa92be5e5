#include "neurocpd/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "neurocpd/datagen.hpp"
#include "neurocpd/error.hpp"
#include "neurocpd/flow.hpp"
#include "neurocpd/objective.hpp"
#include "neurocpd/simd/kernels.hpp"

namespace neurocpd {
namespace {

// Stream purposes for make_rng(seed, particle, iteration, purpose).
constexpr std::uint64_t kInit = 0;
constexpr std::uint64_t kPso = 1;
constexpr std::uint64_t kMutation = 2;
constexpr std::uint64_t kReseed = 3;
constexpr std::uint64_t kEpsilon = 4;

void validate(const SwarmConfig& cfg) {
  if (cfg.q == 0) throw DomainError("swarm: q must be at least 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw DomainError("swarm: alpha must lie in [0, 1]");
  if (!(cfg.beta1 >= 0.0 && cfg.beta2 >= 0.0)) throw DomainError("swarm: beta1, beta2 must be >= 0");
  if (!(cfg.diversity_threshold >= 0.0)) throw DomainError("swarm: diversity threshold must be >= 0");
  if (!(cfg.epsilon_stop >= 0.0)) throw DomainError("swarm: epsilon_stop must be >= 0");
  if (cfg.k_max == 0) throw DomainError("swarm: k_max must be at least 1");
  if (cfg.rank == 0) throw DomainError("swarm: rank must be at least 1");
  if (cfg.threads == 0) throw DomainError("swarm: threads must be at least 1");
  if (!(cfg.inner.epsilon > 0.0)) throw DomainError("swarm: epsilon must be positive");
  const double min_eps = cfg.inner.jitter_epsilon ? 0.5 * cfg.inner.epsilon : cfg.inner.epsilon;
  if (cfg.inner.kind == InnerSolver::flow && cfg.inner.step > min_eps)
    throw DomainError("swarm: flow step exceeds the smallest time constant in the swarm");
}

void check_sizes(const SwarmState& sw) {
  const std::size_t len = sw.global_best.size();
  for (const auto& p : sw.particles)
    if (p.position.size() != len || p.velocity.size() != len || p.personal_best.size() != len)
      throw ShapeError("swarm: particle vectors differ in length");
}

std::vector<double> reseed_position(const SwarmState& sw, std::span<const std::size_t> blocks,
                                    const DenseTensor& t, std::size_t rank, Rng& rng) {
  if (sw.global_best.empty()) return flatten(random_init(t, rank, rng));
  const auto upper = mutation_upper_bounds(sw, blocks);
  std::vector<double> x(upper.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(rng, 0.0, upper[i]);
  return x;
}

}  // namespace

std::string_view inner_solver_name(InnerSolver s) noexcept {
  switch (s) {
    case InnerSolver::flow:
      return "flow";
    case InnerSolver::dtpnn_explicit:
      return "dtpnn-explicit";
    case InnerSolver::dtpnn_armijo:
      return "dtpnn-armijo";
    case InnerSolver::dtpnn_semi_implicit:
      return "dtpnn-semiimplicit";
  }
  return "?";
}

SwarmState pso_update(SwarmState sw, const SwarmConfig& cfg, std::span<const PsoDraw> draws) {
  if (draws.size() != sw.particles.size()) throw ShapeError("pso_update: one draw per particle");
  check_sizes(sw);
  const auto& best = sw.global_best;
  for (std::size_t n = 0; n < sw.particles.size(); ++n) {
    Particle& p = sw.particles[n];
    const double c1 = cfg.beta1 * draws[n].gamma1;
    const double c2 = cfg.beta2 * draws[n].gamma2;
    for (std::size_t i = 0; i < p.position.size(); ++i) {
      const double x = p.position[i];
      const double v = cfg.alpha * p.velocity[i] + c1 * (p.personal_best[i] - x) + c2 * (best[i] - x);
      p.velocity[i] = v;
      p.position[i] = std::max(0.0, x + v);
    }
  }
  return sw;
}

SwarmState pso_update(SwarmState sw, const SwarmConfig& cfg) {
  std::vector<PsoDraw> draws(sw.particles.size());
  for (std::size_t n = 0; n < draws.size(); ++n) {
    Rng rng = make_rng(cfg.seed, n, sw.k + 1, kPso);
    draws[n].gamma1 = uniform(rng);
    draws[n].gamma2 = uniform(rng);
  }
  return pso_update(std::move(sw), cfg, draws);
}

SwarmState update_bests(SwarmState sw, std::span<const double> values) {
  if (values.size() != sw.particles.size()) throw ShapeError("update_bests: one value per particle");
  for (std::size_t n = 0; n < values.size(); ++n) {
    Particle& p = sw.particles[n];
    if (values[n] < p.personal_best_value) {
      p.personal_best = p.position;
      p.personal_best_value = values[n];
    }
  }
  std::size_t arg = 0;
  for (std::size_t n = 1; n < sw.particles.size(); ++n)
    if (sw.particles[n].personal_best_value < sw.particles[arg].personal_best_value) arg = n;
  if (!sw.particles.empty() && sw.particles[arg].personal_best_value < sw.global_best_value) {
    sw.global_best = sw.particles[arg].personal_best;
    sw.global_best_value = sw.particles[arg].personal_best_value;
    sw.best_index = arg;
  }
  return sw;
}

double diversity(const SwarmState& sw) {
  if (sw.particles.empty()) return 0.0;
  const auto& k = simd::active();
  double sum = 0.0;
  for (const auto& p : sw.particles) {
    if (p.personal_best.size() != sw.global_best.size()) throw ShapeError("diversity: length mismatch");
    sum += std::sqrt(k.sq_dist(p.personal_best, sw.global_best));
  }
  return sum / static_cast<double>(sw.particles.size());
}

double wavelet(double phi, double a) noexcept {
  return std::exp(-phi / (2.0 * a)) * std::cos(5.0 * phi / a) / std::sqrt(a);
}

double wavelet_dilation(std::size_t k, std::size_t k_max) noexcept {
  return std::exp(10.0 * static_cast<double>(k) / static_cast<double>(k_max));
}

std::vector<double> mutation_upper_bounds(const SwarmState& sw, std::span<const std::size_t> block_sizes) {
  std::vector<double> upper;
  upper.reserve(sw.global_best.size());
  std::size_t offset = 0;
  for (std::size_t len : block_sizes) {
    if (offset + len > sw.global_best.size()) throw ShapeError("mutation bounds: blocks exceed position");
    const auto first = sw.global_best.begin() + static_cast<std::ptrdiff_t>(offset);
    const double m = len == 0 ? 0.0 : *std::max_element(first, first + static_cast<std::ptrdiff_t>(len));
    upper.insert(upper.end(), len, m > 0.0 ? 2.0 * m : 1.0);
    offset += len;
  }
  if (offset != sw.global_best.size()) throw ShapeError("mutation bounds: blocks do not cover position");
  return upper;
}

SwarmState wavelet_mutation(SwarmState sw, const SwarmConfig& cfg, std::size_t k, std::size_t k_max,
                            std::span<const std::size_t> block_sizes) {
  check_sizes(sw);
  const auto upper = mutation_upper_bounds(sw, block_sizes);
  const double a = wavelet_dilation(k, k_max);
  for (std::size_t n = 0; n < sw.particles.size(); ++n) {
    if (n == sw.best_index) continue;
    Particle& p = sw.particles[n];
    Rng rng = make_rng(cfg.seed, n, k + 1, kMutation);
    for (std::size_t i = 0; i < p.position.size(); ++i) {
      const double kappa = wavelet(uniform(rng, -2.5 * a, 2.5 * a), a);
      const double x = p.position[i];
      const double moved = kappa > 0.0 ? x + kappa * (upper[i] - x) : x + kappa * x;
      p.position[i] = std::clamp(moved, 0.0, upper[i]);
      p.velocity[i] = 0.0;
    }
  }
  return sw;
}

KruskalModel initial_model(const DenseTensor& t, std::size_t rank, std::uint64_t seed, std::size_t n) {
  Rng rng = make_rng(seed, n, 0, kInit);
  return random_init(t, rank, rng);
}

InnerResult solve_inner(const DenseTensor& t, KruskalModel start, const InnerConfig& cfg, double epsilon) {
  InnerResult out;
  if (cfg.kind == InnerSolver::flow) {
    FlowState s;
    s.time_constants.assign(start.order(), epsilon);
    s.model = std::move(start);
    s.step = cfg.step;
    s.precondition = cfg.precondition;
    s.ridge = cfg.ridge;
    auto r = solve_to_equilibrium(t, std::move(s), cfg.tol, cfg.max_steps);
    out.model = std::move(r.state.model);
    out.steps = r.steps;
    out.converged = r.converged;
    return out;
  }
  DtpnnState s = DtpnnState::with_defaults(std::move(start));
  s.lambdas.assign(s.model.order(), cfg.lambda);
  s.armijo_alpha = cfg.armijo_alpha;
  s.armijo_beta = cfg.armijo_beta;
  s.precondition = cfg.precondition;
  s.ridge = cfg.ridge;
  s.form = cfg.form;
  s.record_history = false;
  s.stall_tol = cfg.tol;
  const DtpnnMethod method = cfg.kind == InnerSolver::dtpnn_explicit  ? DtpnnMethod::explicit_jacobi
                             : cfg.kind == InnerSolver::dtpnn_armijo ? DtpnnMethod::gauss_seidel_armijo
                                                                     : DtpnnMethod::semi_implicit;
  auto r = run_dtpnn(t, std::move(s), method, cfg.tol, cfg.max_steps);
  out.model = std::move(r.state.model);
  out.steps = r.steps;
  out.converged = r.converged;
  return out;
}

CnoResult cno_run(const DenseTensor& t, const SwarmConfig& cfg, const CnoObserver& observer) {
  validate(cfg);
  const std::vector<std::size_t> dims = t.shape();
  std::vector<std::size_t> blocks;
  for (std::size_t d : dims) blocks.push_back(d * cfg.rank);

  SwarmState sw;
  sw.particles.resize(cfg.q);
  for (std::size_t n = 0; n < cfg.q; ++n) {
    Particle& p = sw.particles[n];
    p.position = flatten(initial_model(t, cfg.rank, cfg.seed, n));
    p.velocity.assign(p.position.size(), 0.0);
    p.personal_best = p.position;
    p.epsilon = cfg.inner.epsilon;
    if (cfg.inner.jitter_epsilon && n > 0) {
      Rng rng = make_rng(cfg.seed, n, 0, kEpsilon);
      p.epsilon = cfg.inner.epsilon * uniform(rng, 0.5, 2.0);
    }
  }

  CnoResult result;
  result.termination = "k_max";
  std::vector<double> values(cfg.q);
  std::vector<std::size_t> steps(cfg.q);
  std::vector<char> failed(cfg.q);
  std::vector<std::exception_ptr> errors(cfg.q);

  const auto solve_particle = [&](std::size_t n) {
    Particle& p = sw.particles[n];
    try {
      auto r = solve_inner(t, unflatten(p.position, dims, cfg.rank), cfg.inner, p.epsilon);
      p.position = flatten(r.model);
      values[n] = objective_direct(t, r.model);
      steps[n] = r.steps;
      failed[n] = 0;
    } catch (const DivergenceError&) {
      failed[n] = 1;
    } catch (const StallError&) {
      failed[n] = 1;
    } catch (const SingularSystemError&) {
      failed[n] = 1;
    } catch (...) {
      errors[n] = std::current_exception();
    }
  };

  for (std::size_t k = 0; k < cfg.k_max; ++k) {
    sw.k = k;
    std::fill(steps.begin(), steps.end(), 0);
    const std::size_t workers = std::min(cfg.threads, cfg.q);
    if (workers <= 1) {
      for (std::size_t n = 0; n < cfg.q; ++n) solve_particle(n);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t n = w; n < cfg.q; n += workers) solve_particle(n);
        });
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    SwarmIteration it;
    it.k = k + 1;
    for (std::size_t n = 0; n < cfg.q; ++n) {
      if (!failed[n]) continue;
      Rng rng = make_rng(cfg.seed, n, k + 1, kReseed);
      Particle& p = sw.particles[n];
      p.position = reseed_position(sw, blocks, t, cfg.rank, rng);
      p.velocity.assign(p.position.size(), 0.0);
      values[n] = objective_direct(t, unflatten(p.position, dims, cfg.rank));
      ++it.reseeded;
    }

    const double previous_best = sw.global_best_value;
    sw = update_bests(std::move(sw), values);
    sw.diversity = diversity(sw);
    it.values = values;
    it.best_value = sw.global_best_value;
    it.diversity = sw.diversity;
    for (std::size_t s : steps) it.inner_steps += s;
    if (cfg.record_bests) {
      for (const auto& p : sw.particles) {
        it.personal_bests.push_back(p.personal_best);
        it.personal_best_values.push_back(p.personal_best_value);
      }
      it.global_best = sw.global_best;
    }

    sw = pso_update(std::move(sw), cfg);
    if (cfg.mutation && sw.diversity < cfg.diversity_threshold) {
      sw = wavelet_mutation(std::move(sw), cfg, k, cfg.k_max, blocks);
      it.mutated = true;
    }

    result.trace.push_back(it);
    if (observer && !observer(result.trace.back(), unflatten(sw.global_best, dims, cfg.rank))) {
      result.termination = "observer";
      break;
    }
    if (k > 0 && std::abs(previous_best - sw.global_best_value) < cfg.epsilon_stop) {
      result.termination = "epsilon_stop";
      break;
    }
  }
  result.best = unflatten(sw.global_best, dims, cfg.rank);
  result.best_value = sw.global_best_value;
  return result;
}

}  // namespace neurocpd
