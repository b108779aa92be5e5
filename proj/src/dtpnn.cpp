#include "neurocpd/dtpnn.hpp"

#include <algorithm>
#include <cmath>

#include "neurocpd/error.hpp"
#include "neurocpd/flow.hpp"
#include "neurocpd/objective.hpp"
#include "neurocpd/simd/kernels.hpp"
#include "neurocpd/tensor_io.hpp"

namespace neurocpd {
namespace {

void validate(const DenseTensor& t, const DtpnnState& s, bool lambda_le_one) {
  check_compatible(t, s.model);
  if (s.lambdas.size() != s.model.order()) throw ShapeError("dtpnn: need one lambda per factor");
  for (double l : s.lambdas) {
    if (!(l > 0.0)) throw DomainError("dtpnn: step sizes must be positive");
    if (lambda_le_one && l > 1.0)
      throw DomainError("dtpnn: projected steps need 0 < lambda <= 1 to stay nonnegative");
  }
}

Matrix direction(const KruskalModel& model, std::size_t n, const Matrix& grad, const DtpnnState& s) {
  if (!s.precondition) return grad;
  return precondition(grad, make_preconditioner(model, n, s.ridge));
}

void check_finite(const DtpnnState& s) {
  const auto& k = simd::active();
  for (const auto& f : s.model.factors())
    if (!k.all_finite(f.data()))
      throw DivergenceError(s.iter, "dtpnn diverged at iteration " + std::to_string(s.iter));
}

void finish_step(const DenseTensor& t, DtpnnState& s) {
  check_finite(s);
  ++s.iter;
  if (s.record_history) s.objective_history.push_back(objective_direct(t, s.model));
}

// Jacobi update shared by the explicit and semi-implicit steppers.
template <typename Update>
DtpnnState jacobi_step(const DenseTensor& t, DtpnnState s, Update&& update) {
  const auto& k = simd::active();
  std::vector<Matrix> dirs;
  dirs.reserve(s.model.order());
  double residual = 0.0;
  for (std::size_t n = 0; n < s.model.order(); ++n) {
    Matrix g = gradient(t, s.model, n);
    if (!k.all_finite(g.data()))
      throw DivergenceError(s.iter, "dtpnn diverged at iteration " + std::to_string(s.iter));
    residual = std::max(residual, k.kkt_residual_max(s.model.factor(n).data(), g.data()));
    dirs.push_back(direction(s.model, n, g, s));
  }
  for (std::size_t n = 0; n < s.model.order(); ++n) {
    auto x = s.model.factor(n).data();
    update(x, dirs[n].data(), s.lambdas[n]);
  }
  s.residual = residual;
  finish_step(t, s);
  return s;
}

}  // namespace

DtpnnState DtpnnState::with_defaults(KruskalModel model) {
  DtpnnState s;
  s.lambdas.assign(model.order(), 1.0);
  s.model = std::move(model);
  return s;
}

std::string_view method_name(DtpnnMethod m) noexcept {
  switch (m) {
    case DtpnnMethod::explicit_jacobi:
      return "dtpnn-explicit";
    case DtpnnMethod::gauss_seidel_armijo:
      return "dtpnn-armijo";
    case DtpnnMethod::semi_implicit:
      return "dtpnn-semiimplicit";
  }
  return "?";
}

DtpnnState step_explicit(const DenseTensor& t, DtpnnState s) {
  validate(t, s, true);
  const auto& k = simd::active();
  return jacobi_step(t, std::move(s), [&](std::span<double> x, std::span<const double> g, double lambda) {
    k.projected_step(x, g, lambda, x);
  });
}

DtpnnState step_semi_implicit(const DenseTensor& t, DtpnnState s) {
  validate(t, s, false);
  const auto& k = simd::active();
  const bool literal = s.form == SemiImplicitForm::literal;
  return jacobi_step(t, std::move(s), [&](std::span<double> x, std::span<const double> g, double lambda) {
    k.semi_implicit_step(x, g, lambda, literal ? 1.0 : lambda, x);
  });
}

DtpnnState step_gauss_seidel_armijo(const DenseTensor& t, DtpnnState s) {
  validate(t, s, true);
  if (!(s.armijo_alpha > 0.0 && s.armijo_alpha < 1.0 && s.armijo_beta > 0.0 && s.armijo_beta < 1.0))
    throw DomainError("dtpnn: Armijo constants must lie in (0, 1)");
  const auto& k = simd::active();
  const std::size_t order = s.model.order();

  s.shrinks = 0;
  s.accepted_lambdas.assign(order, 0.0);
  s.block_objectives.clear();
  if (s.record_blocks) s.block_objectives.push_back(objective_direct(t, s.model));
  double residual = 0.0;

  for (std::size_t n = 0; n < order; ++n) {
    const Matrix g = gradient(t, s.model, n);
    if (!k.all_finite(g.data()))
      throw DivergenceError(s.iter, "dtpnn diverged at iteration " + std::to_string(s.iter));
    auto x = s.model.factor(n).data();
    const double block_res = k.kkt_residual_max(x, g.data());
    residual = std::max(residual, block_res);
    const Matrix p = hadamard_gram(s.model, n);

    // The candidate is linear in lambda: x+ - x = lambda * d1 with d1 = [x - dir]_+ - x.
    // F is quadratic in one block, so f(x+) - f(x) = lambda a + lambda^2 b / 2 exactly,
    // with a = <g, d1> and b = <d1 P, d1>.
    const auto unit_step = [&](const Matrix& dir, Matrix& d1) {
      k.projected_step(x, dir.data(), 1.0, d1.data());
      auto dd = d1.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] -= x[i];
    };
    Matrix dir = direction(s.model, n, g, s);
    Matrix d1(g.rows(), g.cols());
    unit_step(dir, d1);
    double a = k.dot(g.data(), d1.data());
    if (s.precondition && a >= 0.0) {
      dir = g;
      unit_step(dir, d1);
      a = k.dot(g.data(), d1.data());
    }
    if (k.max_abs(d1.data()) == 0.0) {
      if (s.record_blocks) s.block_objectives.push_back(s.block_objectives.back());
      continue;
    }
    const double b = k.dot(multiply(d1, p).data(), d1.data());

    double lambda = s.lambdas[n];
    bool accepted = false;
    for (int shrink = 0; shrink <= s.max_shrinks; ++shrink) {
      const double change = lambda * a + 0.5 * lambda * lambda * b;
      if (change < s.armijo_alpha * lambda * (lambda * a)) {
        accepted = true;
        break;
      }
      if (shrink == s.max_shrinks) break;
      lambda *= s.armijo_beta;
      ++s.shrinks;
    }
    if (accepted) {
      k.projected_step(x, dir.data(), lambda, x);
      s.accepted_lambdas[n] = lambda;
    } else if (block_res >= s.stall_tol) {
      throw StallError("Armijo search exhausted " + std::to_string(s.max_shrinks) +
                       " shrinkages on factor " + std::to_string(n) + " at iteration " +
                       std::to_string(s.iter) + " (KKT residual " + format_double(block_res) + ")");
    }
    if (s.record_blocks) s.block_objectives.push_back(objective_direct(t, s.model));
  }
  s.residual = residual;
  finish_step(t, s);
  return s;
}

DtpnnState step(const DenseTensor& t, DtpnnState s, DtpnnMethod method) {
  switch (method) {
    case DtpnnMethod::explicit_jacobi:
      return step_explicit(t, std::move(s));
    case DtpnnMethod::gauss_seidel_armijo:
      return step_gauss_seidel_armijo(t, std::move(s));
    case DtpnnMethod::semi_implicit:
      return step_semi_implicit(t, std::move(s));
  }
  throw DomainError("dtpnn: unknown method");
}

DtpnnResult run_dtpnn(const DenseTensor& t, DtpnnState s, DtpnnMethod method, double tol,
                      std::size_t max_steps, const DtpnnObserver& observer) {
  if (!(tol > 0.0)) throw DomainError("run_dtpnn: tol must be positive");
  DtpnnResult out;
  const auto kkt = [&](const KruskalModel& m) {
    const auto r = kkt_residuals(t, m);
    return *std::max_element(r.begin(), r.end());
  };
  if (kkt(s.model) < tol) {
    out.converged = true;
  } else {
    while (out.steps < max_steps) {
      s = step(t, std::move(s), method);
      ++out.steps;
      // The stepper's residual belongs to the previous point; confirm at the new one.
      if (s.residual < 10.0 * tol && kkt(s.model) < tol) out.converged = true;
      if (observer && !observer(s)) break;
      if (out.converged) break;
    }
  }
  out.state = std::move(s);
  return out;
}

std::vector<double> effective_step_map(std::span<const double> before,
                                       std::span<const double> after, std::span<const double> grad,
                                       double lambda, double lower, double upper) {
  if (before.size() != after.size() || before.size() != grad.size())
    throw ShapeError("effective_step_map: length mismatch");
  std::vector<double> gamma(before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double x = before[i];
    const double g = grad[i];
    const double q = x - g;
    if (q >= lower && q <= upper) {
      gamma[i] = lambda;
    } else {
      if (g == 0.0)
        throw DomainError("effective_step_map: clamped entry " + std::to_string(i) +
                          " has zero gradient");
      gamma[i] = lambda * (x - (q > upper ? upper : lower)) / g;
    }
    const double rebuilt = x - gamma[i] * g;
    const double scale = std::max({1.0, std::abs(x), std::abs(after[i]), std::abs(gamma[i] * g)});
    if (std::abs(rebuilt - after[i]) > 1e-12 * scale)
      throw Error("effective_step_map: entry " + std::to_string(i) +
                  " is not reproduced by x - gamma g (" + format_double(rebuilt) + " vs " +
                  format_double(after[i]) + ")");
  }
  return gamma;
}

std::vector<Matrix> effective_step_map(const KruskalModel& before, const KruskalModel& after,
                                       const std::vector<Matrix>& grads,
                                       std::span<const double> lambdas, double lower, double upper) {
  if (before.dims() != after.dims() || before.rank() != after.rank() ||
      grads.size() != before.order() || lambdas.size() != before.order())
    throw ShapeError("effective_step_map: model/gradient/step count mismatch");
  std::vector<Matrix> out;
  out.reserve(before.order());
  for (std::size_t n = 0; n < before.order(); ++n) {
    const auto gamma = effective_step_map(before.factor(n).data(), after.factor(n).data(),
                                          grads[n].data(), lambdas[n], lower, upper);
    Matrix m(before.factor(n).rows(), before.rank());
    std::copy(gamma.begin(), gamma.end(), m.data().begin());
    out.push_back(std::move(m));
  }
  return out;
}

std::string StepBound::describe() const {
  if (at_equilibrium) return "equilibrium reached";
  if (!(c >= 0.0)) return "c = " + format_double(c) + " < 0: no admissible step size";
  return "c = " + format_double(c) + ", lambda in [" + format_double(lower) + ", " +
         format_double(upper) + "]";
}

StepBound step_bound_from(double gamma_grad_sq, double residual_sq) {
  StepBound b;
  if (residual_sq == 0.0) {
    b.at_equilibrium = true;
    return b;
  }
  b.c = (1.0 - 2.0 * gamma_grad_sq) / residual_sq;
  if (b.c >= 0.0) {
    const double r = std::sqrt(b.c);
    b.lower = std::max(0.0, 1.0 - r);
    b.upper = 1.0 + r;
  }
  return b;
}

StepBound step_size_bound(const DenseTensor& t, const DtpnnState& s) {
  validate(t, s, false);
  const auto& k = simd::active();
  double gg = 0.0;
  double rr = 0.0;
  for (std::size_t n = 0; n < s.model.order(); ++n) {
    const Matrix g = gradient(t, s.model, n);
    const auto x = s.model.factor(n).data();
    std::vector<double> after(x.size());
    k.projected_step(x, g.data(), s.lambdas[n], after);
    const auto gamma = effective_step_map(x, after, g.data(), s.lambdas[n]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g.data()[i];
      const double step = gamma[i] * gi;
      gg += step * step;
      const double r = x[i] - std::max(0.0, x[i] - gi);
      rr += r * r;
    }
  }
  return step_bound_from(gg, rr);
}

std::vector<double> lyapunov_trace(std::span<const KruskalModel> run, const KruskalModel& equilibrium) {
  const auto target = flatten(equilibrium);
  std::vector<double> out;
  out.reserve(run.size());
  for (const auto& m : run) {
    const auto x = flatten(m);
    if (x.size() != target.size()) throw ShapeError("lyapunov_trace: model size mismatch");
    out.push_back(simd::active().sq_dist(x, target));
  }
  return out;
}

}  // namespace neurocpd
