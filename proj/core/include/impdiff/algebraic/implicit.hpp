#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "impdiff/ad/var.hpp"
#include "impdiff/linalg/dense.hpp"

namespace impdiff::algebraic {

using ConstraintFn = std::function<ad::VarVector(ad::VarSpan x, ad::VarSpan y)>;
using SummaryFn = std::function<ad::VarVector(ad::VarSpan y)>;

/// Implicit function y = f(x) defined by c(x, y) = 0 with dim c == dim y,
/// observed through a summary g(y). An empty summary is the identity.
struct ConstraintSystem {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  ConstraintFn constraint;
  SummaryFn summary;
  std::size_t summary_dim = 0;  ///< ignored when `summary` is empty

  std::size_t effective_summary_dim() const {
    return summary ? summary_dim : output_dim;
  }
};

struct NewtonConfig {
  double residual_tolerance = 1e-12;
  std::size_t max_iterations = 100;
  double initial_step = 1.0;      ///< first trial scale of each Newton step
  std::size_t max_halvings = 40;  ///< line-search budget per iteration
};

/// Iterates and the damping actually applied at each step, for the trace
/// method. iterates[0] is y0; iterates[n+1] = iterates[n] - step_scales[n]·Δn.
struct NewtonTrace {
  std::vector<std::vector<double>> iterates;
  std::vector<double> step_scales;
};

struct ImplicitSolution {
  std::vector<double> y_star;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  std::optional<NewtonTrace> iterate_trace;
};

/// Damped Newton on c(x, ·) = 0 starting from y0, halving the step until the
/// max-norm residual decreases. Throws SingularSystemError when C_y is
/// singular at an iterate and ConvergenceError when the iteration budget or
/// the line search is exhausted.
ImplicitSolution newton_solve(const ConstraintSystem& sys, std::span<const double> x,
                              std::span<const double> y0, const NewtonConfig& cfg = {},
                              bool keep_trace = false);

/// c(x, y) evaluated without derivatives.
std::vector<double> residual(const ConstraintSystem& sys, std::span<const double> x,
                             std::span<const double> y);

/// g(y), or y for the identity summary.
std::vector<double> summarize(const ConstraintSystem& sys, std::span<const double> y);

struct ConstraintJacobians {
  linalg::DenseMatrix c_x;  ///< J×I
  linalg::DenseMatrix c_y;  ///< J×J
};

/// Both constraint Jacobian blocks at (x, y).
ConstraintJacobians constraint_jacobians(const ConstraintSystem& sys,
                                         std::span<const double> x,
                                         std::span<const double> y);

/// J_{g∘f}·v: u = C_x·v by one forward sweep, C_y by J sweeps, t = C_y⁻¹u, then
/// -J_g·t by one forward sweep through the summary. Throws SingularSystemError
/// when C_y is singular (the implicit function is undefined there).
std::vector<double> ift_forward(const ConstraintSystem& sys, std::span<const double> x,
                                std::span<const double> y_star,
                                std::span<const double> v);

/// J_{g∘f}ᵀ·α: β = J_gᵀα by one reverse sweep, C_y by J sweeps,
/// γ = C_y⁻ᵀβ, then -C_xᵀγ by one reverse sweep through the constraint.
std::vector<double> ift_reverse(const ConstraintSystem& sys, std::span<const double> x,
                                std::span<const double> y_star,
                                std::span<const double> alpha);

struct AdjointResult {
  std::vector<double> gradient;
  std::vector<double> multipliers;  ///< λ = -C_y⁻ᵀα
};

/// Adjoint method with the Lagrangian fᵀα + cᵀλ: λ solves α + C_yᵀλ = 0 and the
/// gradient is C_xᵀλ. A non-identity summary is folded in as α ← J_gᵀα.
AdjointResult adjoint_reverse(const ConstraintSystem& sys, std::span<const double> x,
                              std::span<const double> y_star,
                              std::span<const double> alpha);

struct TraceResult {
  std::vector<double> gradient;
  std::vector<double> value;   ///< g(ỹ) as recomputed on the trace tape
  std::size_t tape_length = 0;
  std::size_t iterations = 0;
};

/// Trace method: replays every damped Newton update, including the Jacobian
/// and the pivoted elimination of the linear solve, on one tape spanning all
/// iterations, then reverse-sweeps it. Damping factors and pivot choices are
/// the ones the solver actually took and are treated as constants.
///
/// Throws SingularSystemError if C_y is singular at the converged point.
TraceResult trace_reverse(const ConstraintSystem& sys, std::span<const double> x,
                          std::span<const double> y0, const NewtonConfig& cfg,
                          std::span<const double> alpha);

}  // namespace impdiff::algebraic
