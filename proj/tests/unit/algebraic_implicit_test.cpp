#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "impdiff/algebraic/implicit.hpp"
#include "impdiff/errors.hpp"
#include "support/oracles.hpp"

namespace impdiff {
namespace {

using algebraic::ConstraintSystem;
using ad::Var;
using ad::VarSpan;
using ad::VarVector;

ConstraintSystem identity_system(std::size_t n) {
  return {n, n, [](VarSpan x, VarSpan y) {
            VarVector c;
            for (std::size_t i = 0; i < y.size(); ++i) c.push_back(y[i] - x[i]);
            return c;
          }};
}

ConstraintSystem sqrt_system() {
  return {1, 1, [](VarSpan x, VarSpan y) { return VarVector{y[0] * y[0] - x[0]}; }};
}

ConstraintSystem diagonal_system() {
  return {2, 2, [](VarSpan x, VarSpan y) {
            return VarVector{2.0 * y[0] - x[0], 4.0 * y[1] - x[1]};
          }};
}

// c_j(x, y) = y_j + 0.1·y_j³ + 0.2·y_{j+1}·y_j - Σ_i W_ji x_i, monotone enough
// in y that Newton from 0 converges for modest x.
ConstraintSystem random_polynomial_system(std::mt19937_64& rng, std::size_t n) {
  auto w = std::make_shared<std::vector<double>>(testing::uniform_vector(rng, n * n));
  return {n, n, [w, n](VarSpan x, VarSpan y) {
            VarVector c;
            for (std::size_t j = 0; j < n; ++j) {
              Var cj = y[j] + 0.1 * y[j] * y[j] * y[j] + 0.2 * y[(j + 1) % n] * y[j];
              for (std::size_t i = 0; i < n; ++i) cj = cj - (*w)[j * n + i] * x[i];
              c.push_back(cj);
            }
            return c;
          }};
}

// (g∘f)(x) with a fresh Newton solve per evaluation.
testing::VectorFunction solved_map(const ConstraintSystem& sys, std::vector<double> y0) {
  return [sys, y0](std::span<const double> x) {
    const auto sol = algebraic::newton_solve(sys, x, y0);
    return algebraic::summarize(sys, sol.y_star);
  };
}

TEST(NewtonSolve, IdentityConvergesInOneIteration) {
  const auto sys = identity_system(3);
  const std::vector<double> x{1.0, -2.0, 0.5};
  const auto sol = algebraic::newton_solve(sys, x, std::vector<double>{7.0, 7.0, 7.0});
  EXPECT_EQ(sol.iterations, 1U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sol.y_star[i], x[i], 1e-15);
}

TEST(NewtonSolve, SquareRoot) {
  const auto sol = algebraic::newton_solve(sqrt_system(), std::vector<double>{4.0},
                                           std::vector<double>{1.0});
  EXPECT_NEAR(sol.y_star[0], 2.0, 1e-12);
  EXPECT_LE(sol.residual_norm, 1e-12);
  EXPECT_FALSE(sol.iterate_trace.has_value());
}

TEST(NewtonSolve, DiagonalLinear) {
  const auto sol = algebraic::newton_solve(diagonal_system(), std::vector<double>{2.0, 4.0},
                                           std::vector<double>{0.0, 0.0});
  EXPECT_NEAR(sol.y_star[0], 1.0, 1e-15);
  EXPECT_NEAR(sol.y_star[1], 1.0, 1e-15);
}

TEST(NewtonSolve, TraceIsPopulatedOnRequest) {
  const auto sol = algebraic::newton_solve(sqrt_system(), std::vector<double>{4.0},
                                           std::vector<double>{1.0}, {}, true);
  ASSERT_TRUE(sol.iterate_trace.has_value());
  EXPECT_EQ(sol.iterate_trace->iterates.size(), sol.iterations + 1);
  EXPECT_EQ(sol.iterate_trace->step_scales.size(), sol.iterations);
  EXPECT_EQ(sol.iterate_trace->iterates.front(), std::vector<double>{1.0});
  EXPECT_EQ(sol.iterate_trace->iterates.back(), sol.y_star);
}

TEST(NewtonSolve, NonConvergenceCarriesLastResidual) {
  // y² + 1 = x has no real root for x = 0.
  const ConstraintSystem sys{
      1, 1, [](VarSpan x, VarSpan y) { return VarVector{y[0] * y[0] + 1.0 - x[0]}; }};
  algebraic::NewtonConfig cfg;
  cfg.max_iterations = 5;
  try {
    algebraic::newton_solve(sys, std::vector<double>{0.0}, std::vector<double>{0.3}, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_residual(), 0.5);
    EXPECT_LE(e.iterations(), 5U);
  }
}

TEST(NewtonSolve, SingularIterateThrows) {
  const ConstraintSystem sys{
      1, 1, [](VarSpan x, VarSpan y) { return VarVector{y[0] * y[0] - x[0]}; }};
  EXPECT_THROW(
      algebraic::newton_solve(sys, std::vector<double>{4.0}, std::vector<double>{0.0}),
      SingularSystemError);
}

TEST(NewtonSolve, WrongConstraintDimensionIsStructural) {
  const ConstraintSystem sys{
      1, 2, [](VarSpan x, VarSpan y) { return VarVector{y[0] + y[1] - x[0]}; }};
  EXPECT_THROW(
      algebraic::newton_solve(sys, std::vector<double>{1.0}, std::vector<double>{0.0, 0.0}),
      StructuralError);
}

TEST(IftForward, Examples) {
  const std::vector<double> v{0.3, -1.2};
  EXPECT_EQ(algebraic::ift_forward(identity_system(2), v, v, v), v);

  const auto d = algebraic::ift_forward(sqrt_system(), std::vector<double>{4.0},
                                        std::vector<double>{2.0}, std::vector<double>{1.0});
  EXPECT_NEAR(d[0], 0.25, 1e-15);

  const auto lin =
      algebraic::ift_forward(diagonal_system(), std::vector<double>{2.0, 4.0},
                             std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(lin[0], 0.5, 1e-15);
  EXPECT_NEAR(lin[1], 0.0, 1e-15);
}

TEST(IftReverse, Examples) {
  const std::vector<double> a{0.3, -1.2};
  EXPECT_EQ(algebraic::ift_reverse(identity_system(2), a, a, a), a);

  const auto d = algebraic::ift_reverse(sqrt_system(), std::vector<double>{4.0},
                                        std::vector<double>{2.0}, std::vector<double>{1.0});
  EXPECT_NEAR(d[0], 0.25, 1e-15);

  const auto lin =
      algebraic::ift_reverse(diagonal_system(), std::vector<double>{2.0, 4.0},
                             std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(lin[0], 0.5, 1e-15);
  EXPECT_NEAR(lin[1], 0.25, 1e-15);
}

TEST(AdjointReverse, Examples) {
  const std::vector<double> a{0.3, -1.2};
  EXPECT_EQ(algebraic::adjoint_reverse(identity_system(2), a, a, a).gradient, a);

  const auto r = algebraic::adjoint_reverse(sqrt_system(), std::vector<double>{4.0},
                                            std::vector<double>{2.0},
                                            std::vector<double>{1.0});
  EXPECT_NEAR(r.gradient[0], 0.25, 1e-15);
  EXPECT_NEAR(r.multipliers[0], -0.25, 1e-15);
}

TEST(Singular, EveryMethodRefusesUndefinedImplicitFunction) {
  const auto sys = sqrt_system();
  const std::vector<double> zero{0.0};
  const std::vector<double> one{1.0};
  EXPECT_THROW(algebraic::ift_forward(sys, zero, zero, one), SingularSystemError);
  EXPECT_THROW(algebraic::ift_reverse(sys, zero, zero, one), SingularSystemError);
  EXPECT_THROW(algebraic::adjoint_reverse(sys, zero, zero, one), SingularSystemError);
  // Newton from y0 = 0 at x = 0 is already converged; the trace must still refuse.
  EXPECT_THROW(algebraic::trace_reverse(sys, zero, zero, {}, one), SingularSystemError);
}

TEST(TraceReverse, IdentityIsExact) {
  const std::vector<double> x{1.0, 2.0};
  const std::vector<double> a{0.7, -0.1};
  const auto r =
      algebraic::trace_reverse(identity_system(2), x, std::vector<double>{5.0, 5.0}, {}, a);
  EXPECT_EQ(r.iterations, 1U);
  EXPECT_EQ(r.gradient, a);
}

TEST(TraceReverse, SquareRootMatchesIft) {
  const auto r = algebraic::trace_reverse(sqrt_system(), std::vector<double>{4.0},
                                          std::vector<double>{1.0}, {},
                                          std::vector<double>{1.0});
  EXPECT_NEAR(r.gradient[0], 0.25, 1e-6);
  EXPECT_NEAR(r.value[0], 2.0, 1e-12);
}

TEST(TraceReverse, TapeLengthLinearInIterations) {
  // Same system, starting farther away, so more Newton iterations.
  const auto sys = sqrt_system();
  const std::vector<double> x{4.0};
  const std::vector<double> a{1.0};
  std::vector<std::pair<std::size_t, std::size_t>> samples;
  for (double y0 : {2.5, 8.0, 100.0, 1e4}) {
    const auto r = algebraic::trace_reverse(sys, x, std::vector<double>{y0}, {}, a);
    samples.emplace_back(r.iterations, r.tape_length);
  }
  ASSERT_LT(samples.front().first, samples.back().first);
  // Constant per-iteration cost: tape_length = base + k·iterations.
  const double k = static_cast<double>(samples[1].second - samples[0].second) /
                   static_cast<double>(samples[1].first - samples[0].first);
  for (const auto& [it, len] : samples) {
    EXPECT_EQ(static_cast<double>(len),
              static_cast<double>(samples[0].second) +
                  k * static_cast<double>(it - samples[0].first));
  }
}

TEST(Properties, RandomPolynomialSystemsAgree) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4;
    const auto sys = random_polynomial_system(rng, n);
    const auto x = testing::uniform_vector(rng, n, -0.5, 0.5);
    const std::vector<double> y0(n, 0.0);
    const auto sol = algebraic::newton_solve(sys, x, y0);
    const auto v = testing::uniform_vector(rng, n);
    const auto a = testing::uniform_vector(rng, n);

    const auto jv = algebraic::ift_forward(sys, x, sol.y_star, v);
    const auto jta = algebraic::ift_reverse(sys, x, sol.y_star, a);
    EXPECT_NEAR(testing::dot(a, jv), testing::dot(jta, v), 1e-10) << "trial " << trial;

    const auto adj = algebraic::adjoint_reverse(sys, x, sol.y_star, a);
    EXPECT_LE(testing::max_rel_err(adj.gradient, jta), 1e-12) << "trial " << trial;

    const auto tr = algebraic::trace_reverse(sys, x, y0, {}, a);
    EXPECT_LE(testing::max_rel_err(tr.gradient, jta), 1e-6) << "trial " << trial;

    const auto fd = testing::fd_gradient(solved_map(sys, y0), x, a);
    EXPECT_LE(testing::max_rel_err(jta, fd), 1e-5) << "trial " << trial;
  }
}

TEST(Properties, SummaryComposesOnTape) {
  // g(y) = (y0·y1, sin y0) over the diagonal system: f(x) = (x0/2, x1/4).
  auto sys = diagonal_system();
  sys.summary = [](VarSpan y) { return VarVector{y[0] * y[1], ad::sin(y[0])}; };
  sys.summary_dim = 2;
  const std::vector<double> x{1.0, 3.0};
  const std::vector<double> y0{0.0, 0.0};
  const auto sol = algebraic::newton_solve(sys, x, y0);
  const std::vector<double> a{0.4, -1.1};

  const auto rev = algebraic::ift_reverse(sys, x, sol.y_star, a);
  // d/dx0 = a0·x1/8 + a1·cos(x0/2)/2, d/dx1 = a0·x0/8
  EXPECT_NEAR(rev[0], 0.4 * 3.0 / 8.0 - 1.1 * std::cos(0.5) / 2.0, 1e-14);
  EXPECT_NEAR(rev[1], 0.4 * 1.0 / 8.0, 1e-14);

  const auto fd = testing::fd_gradient(solved_map(sys, y0), x, a);
  EXPECT_LE(testing::max_rel_err(rev, fd), 1e-5);
  EXPECT_LE(testing::max_rel_err(algebraic::adjoint_reverse(sys, x, sol.y_star, a).gradient,
                                 rev),
            1e-12);
  EXPECT_LE(testing::max_rel_err(algebraic::trace_reverse(sys, x, y0, {}, a).gradient, rev),
            1e-6);

  const std::vector<double> v{0.2, 0.9};
  const auto fwd = algebraic::ift_forward(sys, x, sol.y_star, v);
  EXPECT_NEAR(testing::dot(a, fwd), testing::dot(rev, v), 1e-12);
}

}  // namespace
}  // namespace impdiff
