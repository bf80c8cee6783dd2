#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "impdiff/errors.hpp"
#include "impdiff/ode/ode.hpp"
#include "support/oracles.hpp"

namespace impdiff {
namespace {

using ad::Var;
using ad::VarSpan;
using ad::VarVector;
using linalg::DenseMatrix;
using ode::IntegratorConfig;
using ode::Method;
using ode::OdeSystem;

OdeSystem still(std::size_t n) {
  return {n, n, 1.0,
          [](VarSpan, VarSpan y, const Var&) {
            VarVector r;
            for (const Var& v : y) r.push_back(0.0 * v);
            return r;
          },
          [](VarSpan x) { return VarVector(x.begin(), x.end()); }};
}

// y' = -x0·y, y(0) = x1.
OdeSystem decay() {
  return {1, 2, 1.0, [](VarSpan x, VarSpan y, const Var&) { return VarVector{-x[0] * y[0]}; },
          [](VarSpan x) { return VarVector{x[1] * 1.0}; }};
}

// y0' = y1, y1' = -k·y0, y(0) = (1, 0).
OdeSystem harmonic(double horizon) {
  return {2, 1, horizon,
          [](VarSpan x, VarSpan y, const Var&) { return VarVector{y[1] * 1.0, -x[0] * y[0]}; },
          [](VarSpan x) { return VarVector{0.0 * x[0] + 1.0, 0.0 * x[0]}; }};
}

struct LinearModel {
  DenseMatrix a, b, c;  // y' = Ay + Bx, y(0) = Cx
};

LinearModel random_linear(std::mt19937_64& rng, std::size_t n, std::size_t i_dim) {
  LinearModel m{DenseMatrix(n, n), DenseMatrix(n, i_dim), DenseMatrix(n, i_dim)};
  for (std::size_t r = 0; r < n; ++r) {
    const auto ar = testing::uniform_vector(rng, n);
    const auto br = testing::uniform_vector(rng, i_dim);
    const auto cr = testing::uniform_vector(rng, i_dim);
    for (std::size_t k = 0; k < n; ++k) m.a(r, k) = ar[k];
    for (std::size_t k = 0; k < i_dim; ++k) {
      m.b(r, k) = br[k];
      m.c(r, k) = cr[k];
    }
  }
  return m;
}

OdeSystem linear_system(const LinearModel& m, double horizon) {
  const std::size_t n = m.a.rows();
  const std::size_t i_dim = m.b.cols();
  return {n, i_dim, horizon,
          [m, n, i_dim](VarSpan x, VarSpan y, const Var&) {
            VarVector r;
            for (std::size_t i = 0; i < n; ++i) {
              Var acc = 0.0 * y[0];
              for (std::size_t k = 0; k < n; ++k) acc = acc + m.a(i, k) * y[k];
              for (std::size_t k = 0; k < i_dim; ++k) acc = acc + m.b(i, k) * x[k];
              r.push_back(acc);
            }
            return r;
          },
          [m, n, i_dim](VarSpan x) {
            VarVector u;
            for (std::size_t i = 0; i < n; ++i) {
              Var acc = 0.0 * x[0];
              for (std::size_t k = 0; k < i_dim; ++k) acc = acc + m.c(i, k) * x[k];
              u.push_back(acc);
            }
            return u;
          }};
}

// dy(τ)/dx = e^{Aτ}C + A⁻¹(e^{Aτ} - I)B, via the augmented exponential
// exp([[A, B], [0, 0]]τ) to avoid inverting A.
DenseMatrix linear_sensitivity_oracle(const LinearModel& m, double tau) {
  const std::size_t n = m.a.rows();
  const std::size_t i_dim = m.b.cols();
  DenseMatrix aug(n + i_dim, n + i_dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) aug(r, k) = tau * m.a(r, k);
    for (std::size_t k = 0; k < i_dim; ++k) aug(r, n + k) = tau * m.b(r, k);
  }
  const DenseMatrix e = testing::matrix_exponential(aug);
  DenseMatrix phi(n, n), gam(n, i_dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) phi(r, k) = e(r, k);
    for (std::size_t k = 0; k < i_dim; ++k) gam(r, k) = e(r, n + k);
  }
  return phi * m.c + gam;
}

// Nonlinear, time-dependent, x-dependent everywhere.
OdeSystem nonlinear_system() {
  return {3, 2, 1.5,
          [](VarSpan x, VarSpan y, const Var& t) {
            return VarVector{
                -x[0] * y[0] + ad::sin(y[1]) * 0.5,
                y[0] * y[2] * 0.3 - 0.2 * y[1] + x[1] * ad::cos(t),
                -ad::exp(-y[2] * y[2]) * x[0] + 0.1 * y[0] * y[1],
            };
          },
          [](VarSpan x) {
            return VarVector{x[0] * 1.0 + 0.5, ad::sin(x[1]), x[0] * x[1]};
          }};
}

testing::VectorFunction terminal_map(const OdeSystem& sys, const IntegratorConfig& cfg) {
  return [sys, cfg](std::span<const double> x) {
    return ode::integrate(sys, x, cfg).final_state();
  };
}

IntegratorConfig rk4(double h) {
  IntegratorConfig cfg;
  cfg.method = Method::rk4_fixed;
  cfg.step_size = h;
  return cfg;
}

TEST(Integrate, StillSystem) {
  const std::vector<double> x{0.3, -0.4};
  const auto traj = ode::integrate(still(2), x);
  EXPECT_EQ(traj.final_state(), x);
  EXPECT_EQ(traj.start(), 0.0);
  EXPECT_EQ(traj.end(), 1.0);
}

TEST(Integrate, ExponentialDecay) {
  const std::vector<double> x{0.5, 2.0};
  const double exact = 2.0 * std::exp(-0.5);
  EXPECT_NEAR(ode::integrate(decay(), x).final_state()[0], exact, 1e-10);
  EXPECT_NEAR(ode::integrate(decay(), x, rk4(1e-3)).final_state()[0], exact, 1e-12);
}

TEST(Integrate, KnotsStrictlyIncreasingAndHermiteAccurate) {
  const std::vector<double> x{0.5, 2.0};
  const auto traj = ode::integrate(decay(), x);
  for (std::size_t k = 1; k < traj.knots.size(); ++k) {
    EXPECT_GT(traj.knots[k].t, traj.knots[k - 1].t);
  }
  for (double t : {0.0, 0.013, 0.37, 0.5, 0.999, 1.0}) {
    // Cubic Hermite between error-controlled 5th-order steps.
    EXPECT_NEAR(traj.interpolate(t)[0], 2.0 * std::exp(-0.5 * t), 1e-8) << t;
  }
  EXPECT_THROW(traj.interpolate(1.1), StructuralError);
}

TEST(Integrate, HarmonicEnergyConserved) {
  const std::vector<double> x{2.0};
  const auto traj = ode::integrate(harmonic(10.0), x);
  for (const auto& k : traj.knots) {
    const double energy = x[0] * k.y[0] * k.y[0] + k.y[1] * k.y[1];
    EXPECT_NEAR(energy, 2.0, 1e-8) << "t=" << k.t;
  }
}

TEST(Integrate, StepBudgetIsIntegrationError) {
  IntegratorConfig cfg;
  cfg.max_steps = 3;
  EXPECT_THROW(ode::integrate(harmonic(10.0), std::vector<double>{2.0}, cfg), IntegrationError);
  EXPECT_THROW(ode::integrate(harmonic(10.0), std::vector<double>{2.0},
                              [] { auto c = rk4(1e-3); c.max_steps = 10; return c; }()),
               IntegrationError);
}

TEST(Integrate, BlowUpIsIntegrationError) {
  // y' = y², y(0) = 1 blows up at t = 1.
  const OdeSystem sys{1, 1, 2.0,
                      [](VarSpan, VarSpan y, const Var&) { return VarVector{y[0] * y[0]}; },
                      [](VarSpan x) { return VarVector{x[0] * 1.0}; }};
  EXPECT_THROW(ode::integrate(sys, std::vector<double>{1.0}), IntegrationError);
}

TEST(AdjointReverse, StillSystemIsIdentity) {
  const std::vector<double> x{0.3, -0.4};
  const std::vector<double> a{1.5, -2.0};
  const auto sys = still(2);
  const auto r = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), a);
  EXPECT_EQ(r.gradient, a);
  for (const auto& k : r.adjoint.knots) EXPECT_EQ(k.y, (std::vector<double>{0.0, 0.0}));
}

TEST(AdjointReverse, ExponentialDecay) {
  const std::vector<double> x{0.5, 2.0};
  const std::vector<double> one{1.0};
  const auto sys = decay();
  const auto r = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), one);
  EXPECT_NEAR(r.gradient[0], -2.0 * std::exp(-0.5), 1e-8);
  EXPECT_NEAR(r.gradient[1], std::exp(-0.5), 1e-8);
  const auto fd = testing::fd_gradient(terminal_map(sys, {}), x, one, 1e-5);
  EXPECT_LE(testing::max_rel_err(r.gradient, fd), 1e-4);
}

TEST(AdjointReverse, ClassicalAdjointAgainstMatrixExponential) {
  // a(t) = α - λ(t) = exp(Aᵀ(τ - t))α for y' = Ay.
  std::mt19937_64 rng(31);
  const auto m = random_linear(rng, 3, 2);
  const double tau = 1.2;
  const auto sys = linear_system(m, tau);
  const std::vector<double> x{0.4, -0.9};
  const auto alpha = testing::uniform_vector(rng, 3);
  const auto r = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), alpha);
  EXPECT_EQ(r.adjoint.end(), tau);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(r.adjoint.knots.back().y[k], 0.0);
  for (std::size_t idx = 0; idx < r.adjoint.knots.size(); idx += 7) {
    const auto& knot = r.adjoint.knots[idx];
    const auto expected =
        testing::matrix_exponential((tau - knot.t) * m.a.transposed()).multiply(alpha);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(alpha[k] - knot.y[k], expected[k], 1e-9) << "t=" << knot.t;
    }
  }
}

TEST(AdjointReverse, LinearInAlpha) {
  const auto sys = nonlinear_system();
  const std::vector<double> x{0.7, 0.2};
  const auto traj = ode::integrate(sys, x);
  const std::vector<double> a1{1.0, 0.0, -0.5};
  const std::vector<double> a2{0.2, 0.3, 0.9};
  std::vector<double> sum(3);
  for (std::size_t k = 0; k < 3; ++k) sum[k] = 2.0 * a1[k] - 3.0 * a2[k];
  const auto g1 = ode::adjoint_reverse(sys, x, traj, a1).gradient;
  const auto g2 = ode::adjoint_reverse(sys, x, traj, a2).gradient;
  const auto gs = ode::adjoint_reverse(sys, x, traj, sum).gradient;
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(gs[k], 2.0 * g1[k] - 3.0 * g2[k], 1e-10);
  }
}

TEST(AdjointReverse, TrajectoryGapIsStructural) {
  const auto sys = decay();
  const std::vector<double> x{0.5, 2.0};
  auto traj = ode::integrate(sys, x);
  traj.knots.pop_back();
  EXPECT_THROW(ode::adjoint_reverse(sys, x, traj, std::vector<double>{1.0}), StructuralError);
}

TEST(ForwardSensitivity, StillSystemIsInitialJacobian) {
  const std::vector<double> x{0.3, -0.4};
  const auto s = ode::forward_sensitivity(still(2), x).sensitivity;
  EXPECT_EQ(s.entries()[0], 1.0);
  EXPECT_EQ(s.entries()[1], 0.0);
  EXPECT_EQ(s.entries()[2], 0.0);
  EXPECT_EQ(s.entries()[3], 1.0);
}

TEST(ForwardSensitivity, ExponentialDecayMatchesAdjointRow) {
  const std::vector<double> x{0.5, 2.0};
  const auto s = ode::forward_sensitivity(decay(), x).sensitivity;
  EXPECT_NEAR(s(0, 0), -2.0 * std::exp(-0.5), 1e-9);
  EXPECT_NEAR(s(0, 1), std::exp(-0.5), 1e-9);
}

TEST(ForwardSensitivity, LinearSystemMatchesMatrixExponential) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const auto m = random_linear(rng, 3, 2);
    const auto sys = linear_system(m, 1.0);
    const auto x = testing::uniform_vector(rng, 2);
    const auto s = ode::forward_sensitivity(sys, x).sensitivity;
    const auto oracle = linear_sensitivity_oracle(m, 1.0);
    EXPECT_LE((s - oracle).max_abs(), 1e-8) << trial;
  }
}

TEST(Properties, AdjointForwardDuality) {
  std::mt19937_64 rng(5);
  const auto sys = nonlinear_system();
  for (int trial = 0; trial < 3; ++trial) {
    const auto x = testing::uniform_vector(rng, 2, 0.2, 0.9);
    const auto alpha = testing::uniform_vector(rng, 3);
    const auto v = testing::uniform_vector(rng, 2);
    const auto s = ode::forward_sensitivity(sys, x).sensitivity;
    const auto g = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), alpha).gradient;
    EXPECT_NEAR(testing::dot(alpha, s.multiply(v)), testing::dot(g, v), 1e-6) << trial;

    IntegratorConfig tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const auto fd = testing::fd_gradient(terminal_map(sys, tight), x, alpha, 1e-5);
    EXPECT_LE(testing::max_rel_err(g, fd), 1e-4) << trial;
  }
}

TEST(Properties, Rk4AdjointMatchesAdaptive) {
  const auto sys = nonlinear_system();
  const std::vector<double> x{0.6, 0.4};
  const std::vector<double> a{1.0, -1.0, 0.5};
  const auto adaptive = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), a).gradient;
  const auto cfg = rk4(1e-3);
  const auto fixed = ode::adjoint_reverse(sys, x, ode::integrate(sys, x, cfg), a, cfg).gradient;
  EXPECT_LE(testing::max_rel_err(fixed, adaptive), 1e-8);
}

TEST(TraceReverse, StillSystemIsExact) {
  const std::vector<double> x{0.3, -0.4};
  const std::vector<double> a{1.5, -2.0};
  EXPECT_EQ(ode::trace_reverse_ode(still(2), x, rk4(0.1), a).gradient, a);
}

TEST(TraceReverse, ExponentialDecayMatchesAdjoint) {
  const std::vector<double> x{0.5, 2.0};
  const std::vector<double> one{1.0};
  const auto sys = decay();
  const auto tr = ode::trace_reverse_ode(sys, x, rk4(1e-3), one);
  const auto adj = ode::adjoint_reverse(sys, x, ode::integrate(sys, x), one);
  EXPECT_LE(testing::max_rel_err(tr.gradient, adj.gradient), 1e-6);
  EXPECT_EQ(tr.steps, 1000U);
  EXPECT_EQ(tr.final_state, ode::integrate(sys, x, rk4(1e-3)).final_state());
}

TEST(TraceReverse, TapeLengthProportionalToSteps) {
  const auto sys = nonlinear_system();
  const std::vector<double> x{0.6, 0.4};
  const std::vector<double> a{1.0, 0.0, 0.0};
  const auto t1 = ode::trace_reverse_ode(sys, x, rk4(0.01), a);
  const auto t2 = ode::trace_reverse_ode(sys, x, rk4(0.005), a);
  const auto t4 = ode::trace_reverse_ode(sys, x, rk4(0.0025), a);
  EXPECT_EQ(t2.steps, 2 * t1.steps);
  const auto per_step = (t2.tape_length - t1.tape_length) / t1.steps;
  EXPECT_EQ(t4.tape_length - t2.tape_length, per_step * t2.steps);
}

TEST(TraceReverse, RequiresFixedStep) {
  EXPECT_THROW(ode::trace_reverse_ode(decay(), std::vector<double>{0.5, 2.0}, {},
                                      std::vector<double>{1.0}),
               StructuralError);
}

}  // namespace
}  // namespace impdiff
