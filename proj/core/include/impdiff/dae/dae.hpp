#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "impdiff/ad/var.hpp"
#include "impdiff/algebraic/implicit.hpp"
#include "impdiff/linalg/dense.hpp"
#include "impdiff/ode/integrator.hpp"
#include "impdiff/ode/ode.hpp"

namespace impdiff::dae {

/// (x, y, t) with y = (yᵈ, yᵃ) of length D + A.
using DaeFn = std::function<ad::VarVector(ad::VarSpan x, ad::VarSpan y, const ad::Var& t)>;
using GuessFn = std::function<std::vector<double>(std::span<const double> x)>;

/// Semi-explicit index-1 DAE on [0, horizon]:
///   ẏᵈ = rᵈ(x, y, t),  0 = cᵃ(x, y, t),  yᵈ(0) = uᵈ(x),
/// with ∂cᵃ/∂yᵃ invertible along the solution. The summary is y(horizon).
struct DaeSystem {
  std::size_t differential_dim = 0;
  std::size_t algebraic_dim = 0;
  std::size_t input_dim = 0;
  double horizon = 1.0;
  DaeFn rhs_differential;
  DaeFn algebraic_constraint;
  ode::InitialFn initial_differential;
  GuessFn algebraic_guess;  ///< starting point for yᵃ(0); empty means zeros
  algebraic::NewtonConfig newton;

  std::size_t state_dim() const { return differential_dim + algebraic_dim; }
};

struct ConsistentState {
  std::vector<double> differential;
  std::vector<double> algebraic;
};

/// yᵈ₀ = uᵈ(x) and yᵃ₀ solving cᵃ(x, (yᵈ₀, ·), 0) = 0. Any Newton failure is
/// reported as InitializationError.
ConsistentState consistent_initialize(const DaeSystem& sys, std::span<const double> x);

/// Differential knots plus the algebraic state and its rate at every knot.
struct DaeTrajectory {
  ode::DenseTrajectory differential;
  std::vector<std::vector<double>> algebraic;       ///< yᵃ at each knot
  std::vector<std::vector<double>> algebraic_rate;  ///< ẏᵃ at each knot

  /// (yᵈ(τ), yᵃ(τ))
  std::vector<double> final_state() const;
};

/// Half-explicit scheme: the chosen explicit method advances yᵈ, and every
/// stage first projects yᵃ onto cᵃ = 0 by Newton warm-started from the last
/// projection. ẏᵃ = -(∂cᵃ/∂yᵃ)⁻¹(∂cᵃ/∂yᵈ·ẏᵈ + ∂cᵃ/∂t). With A = 0 this performs
/// exactly the operations of ode::integrate.
DaeTrajectory dae_integrate(const DaeSystem& sys, std::span<const double> x,
                            const ode::IntegratorConfig& cfg = {},
                            ode::AdvanceStats* stats = nullptr);

struct DaeAdjointResult {
  std::vector<double> gradient;
  std::vector<double> lambda_d0;        ///< λᵈ(0)
  std::vector<double> lambda_a_terminal;  ///< λᵃ(τ) = -(∂cᵃ/∂yᵃ)⁻ᵀ(∂rᵈ/∂yᵃ)ᵀ(α_eff)
  std::vector<double> alpha_effective;  ///< α_d - (∂cᵃ/∂yᵈ)ᵀ(∂cᵃ/∂yᵃ)⁻ᵀα_a
  ode::AdvanceStats stats;
};

/// Adjoint DAE integrated backwards from λᵈ(τ) = 0. With a = α_eff - λᵈ:
///   (g_x, g_d, g_a) = (∂rᵈ/∂(x, yᵈ, yᵃ))ᵀa,
///   λᵃ = -(∂cᵃ/∂yᵃ)⁻ᵀ g_a  (solved pointwise),
///   dλᵈ/dt = g_d + (∂cᵃ/∂yᵈ)ᵀλᵃ,   dq/dt = -(g_x + (∂cᵃ/∂x)ᵀλᵃ).
/// Gradient = (∂uᵈ/∂x)ᵀ(α_eff - λᵈ(0)) + q(0) - (∂cᵃ/∂x)ᵀ(∂cᵃ/∂yᵃ)⁻ᵀα_a|_τ.
DaeAdjointResult dae_adjoint_reverse(const DaeSystem& sys, std::span<const double> x,
                                     const DaeTrajectory& trajectory,
                                     std::span<const double> alpha,
                                     const ode::IntegratorConfig& cfg = {});

/// ODE over yᵈ whose right-hand side solves for yᵃ by Newton and places it on
/// the tape as implicit nodes whose partials come from the implicit function
/// theorem (reverse mode, one sweep per algebraic component). First order only.
/// The returned right-hand side carries a shared Newton warm start, so it must not
/// be evaluated concurrently.
ode::OdeSystem reduce_to_ode(const DaeSystem& sys);

/// Gradient of ⟨α, y(τ)⟩ through reduce_to_ode and the ODE adjoint; the yᵃ
/// block of α is pulled back through the terminal constraint.
std::vector<double> reduction_gradient(const DaeSystem& sys, std::span<const double> x,
                                       std::span<const double> alpha,
                                       const ode::IntegratorConfig& cfg = {});

/// dy(τ)/dx (N×I): forward sensitivities of the reduced ODE for yᵈ, and the
/// IFT at τ for yᵃ.
linalg::DenseMatrix dae_forward_sensitivity(const DaeSystem& sys, std::span<const double> x,
                                            const ode::IntegratorConfig& cfg = {});

/// Max-norm of cᵃ at (x, y, t).
double constraint_residual(const DaeSystem& sys, std::span<const double> x,
                           std::span<const double> y, double t);

}  // namespace impdiff::dae
