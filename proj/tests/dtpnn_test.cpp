#include <gtest/gtest.h>

#include <cmath>

#include "neurocpd/datagen.hpp"
#include "neurocpd/dtpnn.hpp"
#include "neurocpd/error.hpp"
#include "neurocpd/flow.hpp"
#include "test_util.hpp"

using namespace neurocpd;
using namespace neurocpd::testing;

namespace {

DtpnnState state_for(const DenseTensor& t, std::size_t rank, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return DtpnnState::with_defaults(random_init(t, rank, rng));
}

double max_kkt(const DenseTensor& t, const KruskalModel& m) {
  const auto r = kkt_residuals(t, m);
  return *std::max_element(r.begin(), r.end());
}

}  // namespace

TEST(DtpnnExplicit, BitwiseEqualToFlowStep) {
  Rng rng = make_rng(1);
  const auto t = random_tensor({4, 5, 3}, rng);
  const auto m = random_model({4, 5, 3}, 3, rng);
  auto fs = FlowState::with_defaults(m);
  fs.precondition = false;
  fs.step = 0.5;
  auto ds = DtpnnState::with_defaults(m);
  ds.lambdas = {0.5, 0.5, 0.5};
  EXPECT_EQ(step_explicit(t, ds).model, flow_step(t, fs).model);

  fs.precondition = true;
  ds.precondition = true;
  EXPECT_EQ(step_explicit(t, ds).model, flow_step(t, fs).model);
}

TEST(DtpnnExplicit, UnitStepIsProjectedGradient) {
  Rng rng = make_rng(2);
  const auto t = random_tensor({3, 3, 3}, rng);
  const auto s = DtpnnState::with_defaults(random_model({3, 3, 3}, 2, rng));
  const auto next = step_explicit(t, s);
  for (std::size_t n = 0; n < 3; ++n) {
    const Matrix g = gradient(t, s.model, n);
    for (std::size_t i = 0; i < g.size(); ++i)
      EXPECT_NEAR(next.model.factor(n).data()[i],
                  std::max(0.0, s.model.factor(n).data()[i] - g.data()[i]), 1e-14);
  }
  EXPECT_EQ(next.iter, 1u);
  ASSERT_EQ(next.objective_history.size(), 1u);
  EXPECT_DOUBLE_EQ(next.objective_history[0], objective_direct(t, next.model));
}

TEST(DtpnnExplicit, Validation) {
  Rng rng = make_rng(3);
  const auto t = random_tensor({2, 2, 2}, rng);
  auto s = DtpnnState::with_defaults(random_model({2, 2, 2}, 1, rng));
  s.lambdas = {1.5, 1.0, 1.0};
  EXPECT_THROW(step_explicit(t, s), DomainError);
  EXPECT_NO_THROW(step_semi_implicit(t, s));
  s.lambdas = {1.0, 1.0};
  EXPECT_THROW(step_explicit(t, s), ShapeError);
  s.lambdas = {1.0, 0.0, 1.0};
  EXPECT_THROW(step_semi_implicit(t, s), DomainError);
}

TEST(Dtpnn, FixedPointsAreFlowEquilibria) {
  Rng rng = make_rng(4);
  const auto truth = random_model({4, 4, 4}, 2, rng, 0.2, 1.0);
  const auto t = kruskal_full(truth);
  for (auto method : {DtpnnMethod::explicit_jacobi, DtpnnMethod::gauss_seidel_armijo, DtpnnMethod::semi_implicit}) {
    const auto next = step(t, DtpnnState::with_defaults(truth), method);
    EXPECT_LE(max_abs_diff(next.model.factor(1), truth.factor(1)), 1e-12) << method_name(method);
  }
  // Away from equilibrium the explicit displacement is lambda times the flow rhs.
  const auto m = random_model({4, 4, 4}, 2, rng);
  auto fs = FlowState::with_defaults(m);
  fs.precondition = false;
  auto ds = DtpnnState::with_defaults(m);
  ds.lambdas = {0.25, 0.25, 0.25};
  const auto next = step_explicit(t, ds);
  for (std::size_t n = 0; n < 3; ++n) {
    const Matrix rhs = flow_rhs(t, fs, n);
    for (std::size_t i = 0; i < rhs.size(); ++i)
      EXPECT_NEAR(next.model.factor(n).data()[i] - m.factor(n).data()[i], 0.25 * rhs.data()[i], 1e-14);
  }
}

TEST(DtpnnArmijo, BlockObjectivesNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed, 7);
    const auto t = random_tensor({4, 4, 4}, rng);
    auto s = DtpnnState::with_defaults(random_model({4, 4, 4}, 3, rng));
    s.record_blocks = true;
    std::size_t violations = 0;
    for (int it = 0; it < 200; ++it) {
      s = step_gauss_seidel_armijo(t, std::move(s));
      ASSERT_EQ(s.block_objectives.size(), 4u);
      for (std::size_t b = 1; b < 4; ++b)
        if (s.block_objectives[b] > s.block_objectives[b - 1] + 1e-12) ++violations;
      ASSERT_TRUE(nonnegative(s.model));
    }
    EXPECT_EQ(violations, 0u) << "seed " << seed;
    for (std::size_t i = 1; i < s.objective_history.size(); ++i)
      EXPECT_LE(s.objective_history[i], s.objective_history[i - 1] + 1e-12);
  }
}

TEST(DtpnnArmijo, ExactFitNeedsNoShrinkage) {
  Rng rng = make_rng(5);
  const auto truth = random_model({3, 4, 3}, 2, rng, 0.2, 1.0);
  auto s = DtpnnState::with_defaults(truth);
  s.precondition = true;
  const auto next = step_gauss_seidel_armijo(kruskal_full(truth), s);
  EXPECT_EQ(next.shrinks, 0u);
  EXPECT_LE(max_abs_diff(next.model.factor(2), truth.factor(2)), 1e-12);
}

TEST(DtpnnArmijo, AcceptedStepsSatisfySufficientDecrease) {
  Rng rng = make_rng(6);
  const auto t = random_tensor({5, 4, 3}, rng);
  auto s = DtpnnState::with_defaults(random_model({5, 4, 3}, 3, rng, 0.0, 3.0));
  s.record_blocks = true;
  for (int it = 0; it < 30; ++it) {
    const auto before = s.model;
    s = step_gauss_seidel_armijo(t, std::move(s));
    for (double l : s.accepted_lambdas) {
      EXPECT_GE(l, 0.0);
      EXPECT_LE(l, 1.0);
    }
    // lambda_k is beta^j for some j.
    for (double l : s.accepted_lambdas)
      if (l > 0.0) EXPECT_DOUBLE_EQ(std::log2(l), std::round(std::log2(l)));
  }
}

TEST(DtpnnArmijo, RejectsBadConstants) {
  Rng rng = make_rng(7);
  const auto t = random_tensor({2, 2, 2}, rng);
  auto s = DtpnnState::with_defaults(random_model({2, 2, 2}, 1, rng));
  s.armijo_alpha = 1.0;
  EXPECT_THROW(step_gauss_seidel_armijo(t, s), DomainError);
  s.armijo_alpha = 1e-4;
  s.armijo_beta = 0.0;
  EXPECT_THROW(step_gauss_seidel_armijo(t, s), DomainError);
}

TEST(DtpnnArmijo, DifficultTensorErrorDropsTenfold) {
  const auto p = gen_problem("difficult9", 1);
  auto s = state_for(p.tensor, 10, 2);
  const double start = relative_error(p.tensor, s.model);
  const auto r = run_dtpnn(p.tensor, s, DtpnnMethod::gauss_seidel_armijo, 1e-12, 2000);
  EXPECT_LE(relative_error(p.tensor, r.state.model), start / 10.0);
}

TEST(DtpnnSemiImplicit, ZeroGradientUnitStepIsIdentity) {
  Rng rng = make_rng(8);
  const auto truth = random_model({3, 3, 3}, 2, rng, 0.2, 1.0);
  const auto t = kruskal_full(truth);
  for (auto form : {SemiImplicitForm::corrected, SemiImplicitForm::literal}) {
    auto s = DtpnnState::with_defaults(truth);
    s.form = form;
    EXPECT_LE(max_abs_diff(step_semi_implicit(t, s).model.factor(0), truth.factor(0)), 1e-12);
  }
}

TEST(DtpnnSemiImplicit, CorrectedFormIsExplicitWithShortenedStep) {
  Rng rng = make_rng(9);
  const auto t = random_tensor({3, 4, 5}, rng);
  const auto m = random_model({3, 4, 5}, 2, rng);
  auto si = DtpnnState::with_defaults(m);
  si.lambdas = {1.0, 3.0, 0.5};
  auto ex = DtpnnState::with_defaults(m);
  ex.lambdas = {0.5, 0.75, 1.0 / 3.0};
  const auto a = step_semi_implicit(t, si).model;
  const auto b = step_explicit(t, ex).model;
  for (std::size_t n = 0; n < 3; ++n) EXPECT_LE(max_abs_diff(a.factor(n), b.factor(n)), 1e-14);
}

TEST(DtpnnSemiImplicit, LiteralFormScalesProjection) {
  Rng rng = make_rng(10);
  const auto t = random_tensor({3, 3, 3}, rng);
  auto s = DtpnnState::with_defaults(random_model({3, 3, 3}, 2, rng));
  s.form = SemiImplicitForm::literal;
  s.lambdas = {2.0, 2.0, 2.0};
  const auto next = step_semi_implicit(t, s);
  const Matrix g = gradient(t, s.model, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = s.model.factor(0).data()[i];
    EXPECT_NEAR(next.model.factor(0).data()[i], (x + std::max(0.0, x - g.data()[i])) / 3.0, 1e-14);
  }
}

TEST(DtpnnSemiImplicit, ResidualVanishesAlongRuns) {
  Rng rng = make_rng(11);
  const auto truth = random_model({5, 5, 5}, 3, rng);
  const auto t = kruskal_full(truth);
  auto s = state_for(t, 3, 12);
  s.precondition = true;
  const auto r = run_dtpnn(t, s, DtpnnMethod::semi_implicit, 1e-8, 20000);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(max_kkt(t, r.state.model), 1e-8);
}

TEST(DtpnnSemiImplicit, BeatsExplicitOnDifficultTensors) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = gen_problem("difficult9", seed);
    auto s = state_for(p.tensor, 10, seed + 100);
    s.precondition = true;
    s.record_history = false;
    double ex_err = std::numeric_limits<double>::infinity();
    try {
      ex_err = relative_error(p.tensor, run_dtpnn(p.tensor, s, DtpnnMethod::explicit_jacobi, 1e-12, 500).state.model);
    } catch (const Error&) {
    }
    const double si_err =
        relative_error(p.tensor, run_dtpnn(p.tensor, s, DtpnnMethod::semi_implicit, 1e-12, 500).state.model);
    if (si_err <= ex_err) ++wins;
  }
  EXPECT_GE(wins, 6);
}

TEST(RunDtpnn, ConvergedRunsMeetTolerance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed, 13);
    const auto t = kruskal_full(random_model({5, 4, 6}, 2, rng));
    for (auto method : {DtpnnMethod::gauss_seidel_armijo, DtpnnMethod::semi_implicit}) {
      auto s = state_for(t, 2, seed);
      s.precondition = true;
      const auto r = run_dtpnn(t, s, method, 1e-7, 20000, [&](const DtpnnState& st) {
        EXPECT_TRUE(nonnegative(st.model));
        return true;
      });
      if (r.converged) EXPECT_LT(max_kkt(t, r.state.model), 1e-7);
    }
  }
}

TEST(RunDtpnn, StartAtEquilibriumTakesNoSteps) {
  Rng rng = make_rng(14);
  const auto truth = random_model({3, 3, 3}, 2, rng, 0.2, 1.0);
  const auto r = run_dtpnn(kruskal_full(truth), DtpnnState::with_defaults(truth),
                           DtpnnMethod::gauss_seidel_armijo, 1e-8, 10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.steps, 0u);
}

TEST(EffectiveStepMap, InteriorEntriesGetLambda) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> g{0.1, -0.5, 0.2};
  std::vector<double> after(3);
  for (std::size_t i = 0; i < 3; ++i) after[i] = x[i] - 0.7 * g[i];
  for (double gam : effective_step_map(x, after, g, 0.7)) EXPECT_EQ(gam, 0.7);
}

TEST(EffectiveStepMap, ReconstructsClampedSteps) {
  Rng rng = make_rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_tensor({4, 4, 4}, rng);
    const auto m = random_model({4, 4, 4}, 3, rng, 0.0, 0.3);
    std::vector<Matrix> grads;
    for (std::size_t n = 0; n < 3; ++n) grads.push_back(gradient(t, m, n));
    auto s = DtpnnState::with_defaults(m);
    s.lambdas = {0.9, 0.6, 1.0};
    s.record_history = false;
    const auto after = step_explicit(t, s).model;
    const auto gam = effective_step_map(m, after, grads, s.lambdas);
    std::size_t clamped = 0;
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = 0; i < m.factor(n).size(); ++i) {
        const double rebuilt = m.factor(n).data()[i] - gam[n].data()[i] * grads[n].data()[i];
        EXPECT_NEAR(rebuilt, after.factor(n).data()[i], 1e-12);
        if (gam[n].data()[i] != s.lambdas[n]) ++clamped;
      }
    (void)clamped;
  }
}

TEST(EffectiveStepMap, BoxUpperBound) {
  const std::vector<double> x{0.5, 0.5};
  const std::vector<double> g{-2.0, 0.1};
  // q = x - g = {2.5, 0.4}; the first entry clamps at u = 1.
  const std::vector<double> after{0.5 + 0.5 * (1.0 - 0.5), 0.5 - 0.5 * 0.1};
  const auto gam = effective_step_map(x, after, g, 0.5, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(gam[0], 0.5 * (0.5 - 1.0) / -2.0);
  EXPECT_DOUBLE_EQ(gam[1], 0.5);
}

TEST(EffectiveStepMap, Errors) {
  const std::vector<double> x{0.0};
  const std::vector<double> g{0.0};
  const std::vector<double> after{0.0};
  EXPECT_NO_THROW(effective_step_map(x, after, g, 1.0));
  EXPECT_THROW(effective_step_map(x, after, g, 1.0, 0.5, 1.0), DomainError);
  const std::vector<double> wrong{0.3};
  EXPECT_THROW(effective_step_map(std::vector<double>{1.0}, wrong, std::vector<double>{0.1}, 1.0), Error);
  EXPECT_THROW(effective_step_map(x, std::vector<double>{}, g, 1.0), ShapeError);
}

TEST(StepBound, ClosedFormIntervals) {
  // c = (1 - 2 gg) / rr
  const auto one = step_bound_from(0.0, 1.0);
  EXPECT_DOUBLE_EQ(one.c, 1.0);
  EXPECT_DOUBLE_EQ(one.lower, 0.0);
  EXPECT_DOUBLE_EQ(one.upper, 2.0);
  const auto zero = step_bound_from(0.5, 3.0);
  EXPECT_DOUBLE_EQ(zero.c, 0.0);
  EXPECT_DOUBLE_EQ(zero.lower, 1.0);
  EXPECT_DOUBLE_EQ(zero.upper, 1.0);
  EXPECT_TRUE(zero.contains(1.0));
  EXPECT_FALSE(zero.contains(1.1));
  const auto neg = step_bound_from(1.0, 1.0);
  EXPECT_FALSE(neg.feasible());
  EXPECT_NE(neg.describe().find("no admissible"), std::string::npos);
  const auto eq = step_bound_from(0.0, 0.0);
  EXPECT_TRUE(eq.at_equilibrium);
  EXPECT_EQ(eq.describe(), "equilibrium reached");
}

TEST(StepBound, MatchesIndependentAssembly) {
  Rng rng = make_rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_tensor({4, 3, 5}, rng);
    auto s = DtpnnState::with_defaults(random_model({4, 3, 5}, 2, rng, 0.0, 0.5));
    s.lambdas = {0.5, 0.8, 1.0};
    double gg = 0.0, rr = 0.0;
    for (std::size_t n = 0; n < 3; ++n) {
      const Matrix g = gradient(t, s.model, n);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = s.model.factor(n).data()[i];
        const double gi = g.data()[i];
        const double gamma = x - gi >= 0.0 ? s.lambdas[n] : s.lambdas[n] * x / gi;
        gg += (gamma * gi) * (gamma * gi);
        rr += (x - std::max(0.0, x - gi)) * (x - std::max(0.0, x - gi));
      }
    }
    const auto b = step_size_bound(t, s);
    const double c = (1.0 - 2.0 * gg) / rr;
    EXPECT_NEAR(b.c, c, 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST(StepBound, EquilibriumReported) {
  Rng rng = make_rng(17);
  const auto t = random_tensor({3, 3, 3}, rng);
  KruskalModel zero(std::vector<std::size_t>{3, 3, 3}, 2);
  const auto b = step_size_bound(t, DtpnnState::with_defaults(zero));
  EXPECT_TRUE(b.at_equilibrium);
  EXPECT_FALSE(b.feasible());
}

TEST(Lyapunov, TraceBasics) {
  Rng rng = make_rng(18);
  const auto m = random_model({2, 3, 2}, 2, rng);
  std::vector<KruskalModel> run(4, m);
  for (double v : lyapunov_trace(run, m)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(lyapunov_trace(run, random_model({2, 3, 3}, 2, rng)), ShapeError);
}

TEST(Lyapunov, ArmijoRunsApproachTheirLimit) {
  std::size_t steps = 0, decreasing = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, 19);
    const auto t = kruskal_full(random_model({5, 5, 5}, 3, rng));
    auto s = state_for(t, 3, seed);
    std::vector<KruskalModel> run{s.model};
    const auto r = run_dtpnn(t, s, DtpnnMethod::gauss_seidel_armijo, 1e-9, 20000, [&](const DtpnnState& st) {
      run.push_back(st.model);
      return true;
    });
    if (!r.converged) continue;
    const auto l = lyapunov_trace(run, r.state.model);
    EXPECT_LT(l.back(), 1e-8);
    for (std::size_t i = 1; i < l.size(); ++i) {
      ++steps;
      if (l[i] <= l[i - 1]) ++decreasing;
    }
  }
  ASSERT_GT(steps, 0u);
  EXPECT_GE(static_cast<double>(decreasing), 0.95 * static_cast<double>(steps));
}
