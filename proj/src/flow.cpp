#include "neurocpd/flow.hpp"

#include <algorithm>
#include <string>

#include "neurocpd/error.hpp"
#include "neurocpd/simd/kernels.hpp"

namespace neurocpd {
namespace {

void validate(const DenseTensor& t, const FlowState& s) {
  check_compatible(t, s.model);
  if (s.time_constants.size() != s.model.order())
    throw ShapeError("flow: need one time constant per factor");
  for (double e : s.time_constants)
    if (!(e > 0.0)) throw DomainError("flow: time constants must be positive");
  if (!(s.step > 0.0)) throw DomainError("flow: step must be positive");
}

// Search direction g_n (preconditioned gradient) for every factor at s.model.
std::vector<Matrix> directions(const DenseTensor& t, const FlowState& s) {
  std::vector<Matrix> out;
  out.reserve(s.model.order());
  for (std::size_t n = 0; n < s.model.order(); ++n) {
    Matrix g = gradient(t, s.model, n);
    if (s.precondition) g = precondition(g, make_preconditioner(s.model, n, s.ridge));
    out.push_back(std::move(g));
  }
  return out;
}

double residual_of(const KruskalModel& model, const std::vector<Matrix>& dirs) {
  const auto& k = simd::active();
  double r = 0.0;
  for (std::size_t n = 0; n < model.order(); ++n) {
    if (!k.all_finite(dirs[n].data())) return std::numeric_limits<double>::quiet_NaN();
    r = std::max(r, k.kkt_residual_max(model.factor(n).data(), dirs[n].data()));
  }
  return r;
}

void apply_projected(FlowState& s, const std::vector<Matrix>& dirs) {
  const auto& k = simd::active();
  for (std::size_t n = 0; n < s.model.order(); ++n) {
    auto a = s.model.factor(n).data();
    k.projected_step(a, dirs[n].data(), s.step / s.time_constants[n], a);
    if (!k.all_finite(a))
      throw DivergenceError(s.steps, "flow diverged at step " + std::to_string(s.steps));
  }
  ++s.steps;
}

std::vector<Matrix> barrier_velocities(const DenseTensor& t, const KruskalModel& model,
                                       const FlowState& s, const BarrierParams& bp) {
  std::vector<Matrix> out;
  out.reserve(model.order());
  for (std::size_t n = 0; n < model.order(); ++n) {
    Matrix g = barrier_gradient(t, model, n, bp);
    if (s.precondition)
      g = barrier_precondition(g, make_preconditioner(model, n, s.ridge), model.factor(n), bp);
    const double scale = -1.0 / s.time_constants[n];
    for (double& v : g.data()) v *= scale;
    out.push_back(std::move(g));
  }
  return out;
}

// model + h * sum_i w_i * vel_i; returns false if any entry is not strictly positive.
bool combine(const KruskalModel& base, double h, std::initializer_list<std::pair<double, const std::vector<Matrix>*>> terms,
             KruskalModel& out) {
  const auto& k = simd::active();
  out = base;
  for (std::size_t n = 0; n < base.order(); ++n) {
    auto dst = out.factor(n).data();
    for (const auto& [w, vel] : terms) k.axpy(h * w, (*vel)[n].data(), dst);
    if (!k.all_finite(dst)) return false;
    for (double v : dst)
      if (!(v > 0.0)) return false;
  }
  return true;
}

}  // namespace

FlowState FlowState::with_defaults(KruskalModel model) {
  FlowState s;
  s.time_constants.assign(model.order(), 1.0);
  s.step = 0.5;
  s.model = std::move(model);
  return s;
}

Matrix flow_rhs(const DenseTensor& t, const FlowState& s, std::size_t mode) {
  validate(t, s);
  Matrix g = gradient(t, s.model, mode);
  if (s.precondition) g = precondition(g, make_preconditioner(s.model, mode, s.ridge));
  const auto a = s.model.factor(mode).data();
  Matrix rhs(g.rows(), g.cols());
  // [A - G]_+ - A
  simd::active().projected_step(a, g.data(), 1.0, rhs.data());
  auto r = rhs.data();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= a[i];
  return rhs;
}

FlowState flow_step(const DenseTensor& t, FlowState s) {
  validate(t, s);
  const double min_eps = *std::min_element(s.time_constants.begin(), s.time_constants.end());
  if (s.step > min_eps)
    throw DomainError("flow: step h must not exceed the smallest time constant");
  const auto dirs = directions(t, s);
  s.residual = residual_of(s.model, dirs);
  apply_projected(s, dirs);
  return s;
}

Matrix barrier_flow_rhs(const DenseTensor& t, const FlowState& s, std::size_t mode,
                        const BarrierParams& bp) {
  validate(t, s);
  Matrix g = barrier_gradient(t, s.model, mode, bp);
  if (s.precondition)
    g = barrier_precondition(g, make_preconditioner(s.model, mode, s.ridge), s.model.factor(mode), bp);
  for (double& v : g.data()) v = -v;
  return g;
}

FlowState barrier_flow_step(const DenseTensor& t, FlowState s, const BarrierParams& bp,
                            Integrator integrator, int max_halvings) {
  validate(t, s);
  const auto k1 = barrier_velocities(t, s.model, s, bp);
  {
    const auto& k = simd::active();
    double r = 0.0;
    for (std::size_t n = 0; n < k1.size(); ++n) {
      if (!k.all_finite(k1[n].data()))
        throw DivergenceError(s.steps, "barrier flow diverged at step " + std::to_string(s.steps));
      r = std::max(r, k.max_abs(k1[n].data()) * s.time_constants[n]);
    }
    s.residual = r;
  }

  double h = s.step;
  KruskalModel next;
  for (int halvings = 0; halvings <= max_halvings; ++halvings, h *= 0.5) {
    if (integrator == Integrator::euler) {
      if (combine(s.model, h, {{1.0, &k1}}, next)) {
        s.model = std::move(next);
        ++s.steps;
        return s;
      }
      continue;
    }
    KruskalModel stage;
    if (!combine(s.model, h, {{0.5, &k1}}, stage)) continue;
    const auto k2 = barrier_velocities(t, stage, s, bp);
    if (!combine(s.model, h, {{0.5, &k2}}, stage)) continue;
    const auto k3 = barrier_velocities(t, stage, s, bp);
    if (!combine(s.model, h, {{1.0, &k3}}, stage)) continue;
    const auto k4 = barrier_velocities(t, stage, s, bp);
    if (combine(s.model, h,
                {{1.0 / 6.0, &k1}, {1.0 / 3.0, &k2}, {1.0 / 3.0, &k3}, {1.0 / 6.0, &k4}}, next)) {
      s.model = std::move(next);
      ++s.steps;
      return s;
    }
  }
  throw StallError("barrier flow: step halved " + std::to_string(max_halvings) +
                   " times without staying in the open orthant (step " + std::to_string(s.steps) +
                   ")");
}

EquilibriumResult solve_to_equilibrium(const DenseTensor& t, FlowState s, double tol,
                                       std::size_t max_steps, const FlowObserver& observer) {
  if (!(tol > 0.0)) throw DomainError("solve_to_equilibrium: tol must be positive");
  validate(t, s);
  const double min_eps = *std::min_element(s.time_constants.begin(), s.time_constants.end());
  if (s.step > min_eps)
    throw DomainError("flow: step h must not exceed the smallest time constant");

  EquilibriumResult out;
  for (;;) {
    const auto dirs = directions(t, s);
    s.residual = residual_of(s.model, dirs);
    if (!(s.residual == s.residual))
      throw DivergenceError(s.steps, "flow diverged at step " + std::to_string(s.steps));
    if (s.residual < tol) {
      out.converged = true;
      break;
    }
    if (out.steps == max_steps) break;
    apply_projected(s, dirs);
    ++out.steps;
    if (observer && !observer(s)) break;
  }
  out.state = std::move(s);
  return out;
}

EquilibriumResult solve_barrier_flow(const DenseTensor& t, FlowState s, BarrierParams bp,
                                     double tol, std::size_t max_steps, Integrator integrator,
                                     std::size_t decay_every, double decay_factor,
                                     const FlowObserver& observer) {
  if (!(tol > 0.0)) throw DomainError("solve_barrier_flow: tol must be positive");
  EquilibriumResult out;
  for (;;) {
    if (out.steps == max_steps) {
      // Residual at the final point.
      double r = 0.0;
      for (std::size_t n = 0; n < s.model.order(); ++n)
        r = std::max(r, simd::active().max_abs(barrier_flow_rhs(t, s, n, bp).data()));
      s.residual = r;
      out.converged = r < tol;
      break;
    }
    FlowState next = barrier_flow_step(t, s, bp, integrator);
    if (next.residual < tol) {
      // The residual refers to the starting point of the step just taken.
      out.converged = true;
      break;
    }
    s = std::move(next);
    ++out.steps;
    if (decay_every > 0 && out.steps % decay_every == 0) bp.gamma *= decay_factor;
    if (observer && !observer(s)) break;
  }
  out.state = std::move(s);
  return out;
}

std::vector<double> kkt_residuals(const DenseTensor& t, const KruskalModel& model) {
  std::vector<double> out;
  out.reserve(model.order());
  for (std::size_t n = 0; n < model.order(); ++n) {
    const Matrix g = gradient(t, model, n);
    out.push_back(simd::active().kkt_residual_max(model.factor(n).data(), g.data()));
  }
  return out;
}

}  // namespace neurocpd
