#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "impdiff/dae/dae.hpp"
#include "impdiff/errors.hpp"
#include "support/oracles.hpp"

namespace impdiff {
namespace {

using ad::Var;
using ad::VarSpan;
using ad::VarVector;
using dae::DaeSystem;
using ode::IntegratorConfig;
using ode::Method;

// y1' = -x0·y1, 0 = y1 + y2 - 1, y1(0) = x1.
DaeSystem conserved_sum() {
  DaeSystem s;
  s.differential_dim = 1;
  s.algebraic_dim = 1;
  s.input_dim = 2;
  s.horizon = 1.0;
  s.rhs_differential = [](VarSpan x, VarSpan y, const Var&) { return VarVector{-x[0] * y[0]}; };
  s.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[0] + y[1] - 1.0};
  };
  s.initial_differential = [](VarSpan x) { return VarVector{x[1] * 1.0}; };
  return s;
}

// Two differential states, one algebraic state defined by a cubic with
// explicit time dependence.
DaeSystem cubic_system() {
  DaeSystem s;
  s.differential_dim = 2;
  s.algebraic_dim = 1;
  s.input_dim = 3;
  s.horizon = 1.5;
  s.rhs_differential = [](VarSpan x, VarSpan y, const Var&) {
    return VarVector{-x[0] * y[0] + 0.5 * y[2], y[0] - x[1] * y[1] * y[2]};
  };
  s.algebraic_constraint = [](VarSpan x, VarSpan y, const Var& t) {
    return VarVector{y[2] * y[2] * y[2] + y[2] - y[0] - 0.3 * x[2] * t};
  };
  s.initial_differential = [](VarSpan x) { return VarVector{x[0] * 1.0, x[1] + 1.0}; };
  return s;
}

DaeSystem without_algebraic() {
  DaeSystem s = cubic_system();
  s.algebraic_dim = 0;
  s.algebraic_constraint = {};
  s.rhs_differential = [](VarSpan x, VarSpan y, const Var& t) {
    return VarVector{-x[0] * y[0] + 0.5 * sin(t * x[2]), y[0] - x[1] * y[1]};
  };
  return s;
}

IntegratorConfig tight() {
  IntegratorConfig c;
  c.rel_tol = 1e-12;
  c.abs_tol = 1e-14;
  return c;
}

testing::VectorFunction terminal_map(const DaeSystem& sys, IntegratorConfig cfg) {
  return [sys, cfg](std::span<const double> x) {
    return dae::dae_integrate(sys, x, cfg).final_state();
  };
}

TEST(ConsistentInitialize, SolvesForAlgebraicState) {
  const auto sys = conserved_sum();
  const std::vector<double> x{1.0, 0.3};
  const auto s = dae::consistent_initialize(sys, x);
  ASSERT_EQ(s.algebraic.size(), 1u);
  EXPECT_NEAR(s.differential[0], 0.3, 1e-15);
  EXPECT_NEAR(s.algebraic[0], 0.7, 1e-12);
}

TEST(ConsistentInitialize, NonlinearConstraints) {
  DaeSystem sys = conserved_sum();
  sys.initial_differential = [](VarSpan x) { return VarVector{0.0 * x[0] + 2.0}; };
  sys.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[1] - y[0] * y[0]};
  };
  const std::vector<double> x{1.0, 1.0};
  EXPECT_NEAR(dae::consistent_initialize(sys, x).algebraic[0], 4.0, 1e-12);

  sys.initial_differential = [](VarSpan x) { return VarVector{0.0 * x[0]}; };
  sys.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[1] * y[1] * y[1] + y[1] - y[0]};
  };
  sys.algebraic_guess = [](std::span<const double>) { return std::vector<double>{0.8}; };
  EXPECT_NEAR(dae::consistent_initialize(sys, x).algebraic[0], 0.0, 1e-12);
}

TEST(ConsistentInitialize, UsesGuessToSelectRoot) {
  DaeSystem sys = conserved_sum();
  sys.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[1] * y[1] - 16.0 * y[0]};
  };
  sys.algebraic_guess = [](std::span<const double>) { return std::vector<double>{3.0}; };
  const std::vector<double> x{1.0, 1.0};
  EXPECT_NEAR(dae::consistent_initialize(sys, x).algebraic[0], 4.0, 1e-12);
  sys.algebraic_guess = [](std::span<const double>) { return std::vector<double>{-3.0}; };
  EXPECT_NEAR(dae::consistent_initialize(sys, x).algebraic[0], -4.0, 1e-12);
}

TEST(ConsistentInitialize, NoRootIsInitializationError) {
  DaeSystem sys = conserved_sum();
  sys.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    return VarVector{y[1] * y[1] + 1.0 + 0.0 * y[0]};
  };
  sys.algebraic_guess = [](std::span<const double>) { return std::vector<double>{0.5}; };
  const std::vector<double> x{1.0, 1.0};
  EXPECT_THROW(dae::consistent_initialize(sys, x), InitializationError);
}

TEST(ConsistentInitialize, EmptyAlgebraicBlock) {
  const auto sys = without_algebraic();
  const std::vector<double> x{0.4, 0.2, 1.0};
  const auto s = dae::consistent_initialize(sys, x);
  EXPECT_TRUE(s.algebraic.empty());
  EXPECT_DOUBLE_EQ(s.differential[1], 1.2);
}

TEST(DaeIntegrate, ConservedSumClosedForm) {
  const auto sys = conserved_sum();
  const std::vector<double> x{1.0, 0.5};
  const auto traj = dae::dae_integrate(sys, x, tight());
  const auto y = traj.final_state();
  EXPECT_NEAR(y[0], 0.5 * std::exp(-1.0), 1e-10);
  EXPECT_NEAR(y[1], 1.0 - 0.5 * std::exp(-1.0), 1e-10);
  // ẏ2 = x0·y1 along the solution.
  for (std::size_t k = 0; k < traj.differential.knots.size(); ++k) {
    EXPECT_NEAR(traj.algebraic_rate[k][0], traj.differential.knots[k].y[0], 1e-12);
  }
}

TEST(DaeIntegrate, ConstraintHoldsAtEveryKnot) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const auto traj = dae::dae_integrate(sys, x);
  const auto& knots = traj.differential.knots;
  ASSERT_GE(knots.size(), 2u);
  for (std::size_t k = 0; k < knots.size(); ++k) {
    std::vector<double> y = knots[k].y;
    y.insert(y.end(), traj.algebraic[k].begin(), traj.algebraic[k].end());
    EXPECT_LE(dae::constraint_residual(sys, x, y, knots[k].t), 1e-10) << k;
  }
}

TEST(DaeIntegrate, AlgebraicRateMatchesDifferentiatedConstraint) {
  // (3y3² + 1)ẏ3 = ẏ1 + 0.3·x2
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const auto traj = dae::dae_integrate(sys, x);
  for (std::size_t k = 0; k < traj.algebraic.size(); ++k) {
    const double ya = traj.algebraic[k][0];
    const double expected =
        (traj.differential.knots[k].ydot[0] + 0.3 * x[2]) / (3.0 * ya * ya + 1.0);
    EXPECT_NEAR(traj.algebraic_rate[k][0], expected, 1e-12);
  }
}

TEST(DaeIntegrate, EmptyAlgebraicBlockMatchesOde) {
  const auto sys = without_algebraic();
  const std::vector<double> x{0.4, 0.2, 1.0};
  for (Method m : {Method::rk45_adaptive, Method::rk4_fixed}) {
    IntegratorConfig cfg;
    cfg.method = m;
    cfg.step_size = 1e-2;
    const auto dtraj = dae::dae_integrate(sys, x, cfg);
    const auto otraj = ode::integrate(dae::reduce_to_ode(sys), x, cfg);
    ASSERT_EQ(dtraj.differential.knots.size(), otraj.knots.size());
    EXPECT_EQ(dtraj.final_state(), otraj.final_state());

    const std::vector<double> alpha{1.0, -0.5};
    const auto dg = dae::dae_adjoint_reverse(sys, x, dtraj, alpha, cfg).gradient;
    const auto og = ode::adjoint_reverse(dae::reduce_to_ode(sys), x, otraj, alpha, cfg).gradient;
    EXPECT_LE(testing::max_rel_err(dg, og), 1e-12);
  }
}

TEST(DaeAdjoint, ConservedSumClosedForm) {
  const auto sys = conserved_sum();
  const std::vector<double> x{1.0, 0.5};
  const auto traj = dae::dae_integrate(sys, x, tight());
  const std::vector<double> alpha{0.0, 1.0};
  const auto r = dae::dae_adjoint_reverse(sys, x, traj, alpha, tight());
  // y2(τ) = 1 - x1·exp(-x0·τ)
  EXPECT_NEAR(r.gradient[0], 0.5 * std::exp(-1.0), 1e-9);
  EXPECT_NEAR(r.gradient[1], -std::exp(-1.0), 1e-9);
  ASSERT_EQ(r.alpha_effective.size(), 1u);
  EXPECT_NEAR(r.alpha_effective[0], -1.0, 1e-15);
  ASSERT_EQ(r.lambda_a_terminal.size(), 1u);
  EXPECT_NEAR(r.lambda_a_terminal[0], 0.0, 1e-15);  // rᵈ does not read yᵃ
}

TEST(DaeAdjoint, SingularAlgebraicJacobian) {
  DaeSystem sys = conserved_sum();
  const std::vector<double> x{1.0, 0.5};
  const auto traj = dae::dae_integrate(sys, x);
  // Same solution set but ∂cᵃ/∂yᵃ vanishes on it.
  sys.algebraic_constraint = [](VarSpan, VarSpan y, const Var&) {
    const Var e = y[0] + y[1] - 1.0;
    return VarVector{e * e};
  };
  const std::vector<double> alpha{0.0, 1.0};
  EXPECT_THROW(dae::dae_adjoint_reverse(sys, x, traj, alpha), SingularSystemError);
}

TEST(DaeAdjoint, TrajectoryMustSpanHorizon) {
  const auto sys = conserved_sum();
  const std::vector<double> x{1.0, 0.5};
  auto traj = dae::dae_integrate(sys, x);
  traj.differential.knots.pop_back();
  traj.algebraic.pop_back();
  traj.algebraic_rate.pop_back();
  const std::vector<double> alpha{0.0, 1.0};
  EXPECT_THROW(dae::dae_adjoint_reverse(sys, x, traj, alpha), StructuralError);
}

TEST(DaeAdjoint, MatchesReduction) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const std::vector<double> alpha{0.3, -1.0, 2.0};
  const auto traj = dae::dae_integrate(sys, x);
  const auto g = dae::dae_adjoint_reverse(sys, x, traj, alpha).gradient;
  const auto red = dae::reduction_gradient(sys, x, alpha);
  EXPECT_LE(testing::max_rel_err(g, red), 1e-6);
}

TEST(DaeAdjoint, MatchesForwardSensitivity) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const std::vector<double> alpha{0.3, -1.0, 2.0};
  const auto traj = dae::dae_integrate(sys, x);
  const auto g = dae::dae_adjoint_reverse(sys, x, traj, alpha).gradient;
  const auto s = dae::dae_forward_sensitivity(sys, x);
  ASSERT_EQ(s.rows(), 3u);
  ASSERT_EQ(s.cols(), 3u);
  EXPECT_LE(testing::max_rel_err(g, s.multiply_transposed(alpha)), 1e-6);
}

TEST(DaeAdjoint, MatchesFiniteDifferences) {
  const auto sys = cubic_system();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    auto x = testing::uniform_vector(rng, 3, 0.2, 1.2);
    const auto alpha = testing::uniform_vector(rng, 3);
    const auto traj = dae::dae_integrate(sys, x);
    const auto g = dae::dae_adjoint_reverse(sys, x, traj, alpha).gradient;
    const auto fd = testing::fd_gradient(terminal_map(sys, tight()), x, alpha, 1e-5);
    EXPECT_LE(testing::max_rel_err(g, fd), 1e-4) << trial;
  }
}

TEST(DaeAdjoint, Rk4FixedMatchesFiniteDifferences) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.5, 0.9, -0.4};
  const std::vector<double> alpha{1.0, 0.5, -1.0};
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.step_size = 1e-2;
  const auto traj = dae::dae_integrate(sys, x, cfg);
  const auto g = dae::dae_adjoint_reverse(sys, x, traj, alpha, cfg).gradient;
  const auto fd = testing::fd_gradient(terminal_map(sys, tight()), x, alpha, 1e-5);
  EXPECT_LE(testing::max_rel_err(g, fd), 1e-4);
}

TEST(Properties, AdjointIsLinearInAlpha) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const auto traj = dae::dae_integrate(sys, x);
  std::mt19937_64 rng(3);
  const auto a = testing::uniform_vector(rng, 3);
  const auto b = testing::uniform_vector(rng, 3);
  const double s = 1.7;
  std::vector<double> combo(3);
  for (std::size_t k = 0; k < 3; ++k) combo[k] = a[k] + s * b[k];
  const auto ga = dae::dae_adjoint_reverse(sys, x, traj, a).gradient;
  const auto gb = dae::dae_adjoint_reverse(sys, x, traj, b).gradient;
  const auto gc = dae::dae_adjoint_reverse(sys, x, traj, combo).gradient;
  std::vector<double> expected(3);
  for (std::size_t k = 0; k < 3; ++k) expected[k] = ga[k] + s * gb[k];
  EXPECT_LE(testing::max_rel_err(gc, expected), 1e-8);
}

TEST(Properties, ReducedOdeReproducesTrajectory) {
  const auto sys = cubic_system();
  const std::vector<double> x{0.7, 0.4, 1.1};
  const auto dy = dae::dae_integrate(sys, x, tight()).final_state();
  const auto oy = ode::integrate(dae::reduce_to_ode(sys), x, tight()).final_state();
  for (std::size_t k = 0; k < oy.size(); ++k) EXPECT_NEAR(dy[k], oy[k], 1e-10);
}

TEST(Properties, ReducedRhsIsFirstOrderOnly) {
  const auto sys = cubic_system();
  const auto red = dae::reduce_to_ode(sys);
  const std::vector<double> x{0.7, 0.4, 1.1};
  {
    ad::Tape tape;
    const auto xv = ad::inputs(tape, x);
    const auto r = red.rhs(xv, red.initial(xv), ad::constant(tape, 0.0));
    std::vector<ad::NodeId> ids;
    for (const Var& v : r) ids.push_back(v.id());
    tape.set_outputs(ids);
    const std::vector<double> alpha{1.0, 1.0};
    EXPECT_EQ(ad::reverse_sweep(tape, alpha).size(), 3u);
  }
  ad::Tape nested(ad::TapeMode::nested);
  const auto xv = ad::inputs(nested, x);
  EXPECT_THROW(red.rhs(xv, red.initial(xv), ad::constant(nested, 0.0)), StructuralError);
}

}  // namespace
}  // namespace impdiff
