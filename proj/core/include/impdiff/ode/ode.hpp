#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "impdiff/ad/tape.hpp"
#include "impdiff/ad/var.hpp"
#include "impdiff/linalg/dense.hpp"
#include "impdiff/ode/integrator.hpp"

namespace impdiff::ode {

using RhsFn = std::function<ad::VarVector(ad::VarSpan x, ad::VarSpan y, const ad::Var& t)>;
using InitialFn = std::function<ad::VarVector(ad::VarSpan x)>;

/// dy/dt = r(x, y, t) on [0, horizon], y(0) = u(x), summarized by y(horizon).
struct OdeSystem {
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  double horizon = 1.0;
  RhsFn rhs;
  InitialFn initial;
};

/// u(x) by value.
std::vector<double> initial_state(const OdeSystem& sys, std::span<const double> x);

/// Tape with inputs (x, y) and outputs r(x, y, t); t enters as a constant.
/// `tape` is cleared first so callers can reuse its storage.
void record_rhs(ad::Tape& tape, const OdeSystem& sys, std::span<const double> x,
                std::span<const double> y, double t);

DenseTrajectory integrate(const OdeSystem& sys, std::span<const double> x,
                          const IntegratorConfig& cfg = {}, AdvanceStats* stats = nullptr);

struct OdeAdjointResult {
  std::vector<double> gradient;
  std::vector<double> lambda0;  ///< λ(0)
  /// (t, λ(t), dλ/dt) at the backward pass's accepted steps, increasing in t.
  DenseTrajectory adjoint;
  AdvanceStats stats;
};

/// Backward adjoint: dλ/dt = (∂r/∂y)ᵀ(α - λ) from λ(τ) = 0 down to t = 0, with the
/// quadrature ∫₀^τ (∂r/∂x)ᵀ(α - λ) dt carried as extra backward states. The
/// gradient is (∂u/∂x)ᵀ(α - λ(0)) plus that quadrature.
///
/// The backward pass runs interval by interval over the forward knots and
/// reads y(t) by Hermite interpolation, so the forward step sequence is fixed
/// data. a(t) = α - λ(t) solves the classical adjoint da/dt = -(∂r/∂y)ᵀa.
OdeAdjointResult adjoint_reverse(const OdeSystem& sys, std::span<const double> x,
                                 const DenseTrajectory& trajectory,
                                 std::span<const double> alpha,
                                 const IntegratorConfig& cfg = {});

struct ForwardSensitivityResult {
  linalg::DenseMatrix sensitivity;  ///< S(τ) = dy(τ)/dx, N×I
  std::vector<double> final_state;
  AdvanceStats stats;
};

/// Integrates y' = r together with S' = ∂r/∂x + (∂r/∂y)S, S(0) = ∂u/∂x. Each
/// field evaluation performs I forward sweeps through r, one per column.
ForwardSensitivityResult forward_sensitivity(const OdeSystem& sys, std::span<const double> x,
                                             const IntegratorConfig& cfg = {});

struct OdeTraceResult {
  std::vector<double> gradient;
  std::vector<double> final_state;
  std::size_t tape_length = 0;
  std::size_t steps = 0;
};

/// Records every fixed-step RK4 stage on one tape from x to y(τ) and
/// reverse-sweeps α. Requires Method::rk4_fixed (StructuralError otherwise).
OdeTraceResult trace_reverse_ode(const OdeSystem& sys, std::span<const double> x,
                                 const IntegratorConfig& cfg, std::span<const double> alpha);

}  // namespace impdiff::ode
