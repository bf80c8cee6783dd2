#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "impdiff/ad/var.hpp"

namespace impdiff::difference {

using DeltaFn =
    std::function<ad::VarVector(ad::VarSpan y, ad::VarSpan x, std::size_t step)>;
using InitialFn = std::function<ad::VarVector(ad::VarSpan x)>;

/// y_{i+1} - y_i = Δ(y_i, x, i) for i = 0..steps-1, with y_0 = u(x).
struct DifferenceSystem {
  std::size_t state_dim = 0;
  std::size_t input_dim = 0;
  std::size_t steps = 1;
  DeltaFn delta;
  InitialFn initial;
};

/// states[0..steps], states[i+1] = states[i] + Δ(states[i], x, i).
struct DiscreteTrajectory {
  std::vector<std::vector<double>> states;

  const std::vector<double>& final_state() const { return states.back(); }
};

/// Throws DivergenceError naming the first step whose state is not finite.
DiscreteTrajectory simulate(const DifferenceSystem& sys, std::span<const double> x);

struct DifferenceGradient {
  std::vector<double> gradient;
  /// γ_0..γ_steps for the IFT route, λ_0..λ_steps for the adjoint route.
  /// Index 0 is the cotangent that reaches u(x).
  std::vector<std::vector<double>> multipliers;
  std::size_t sweeps = 0;  ///< reverse sweeps through Δ and u
};

/// Backward elimination of the block-bidiagonal IFT system:
/// γ_steps = α, γ_i = (I + ∂Δ_i/∂y)ᵀγ_{i+1}, and
/// ∇ = (∂u/∂x)ᵀγ_0 + Σ_{i=1..steps} (∂Δ_{i-1}/∂x)ᵀγ_i.
/// One reverse sweep per step plus one through u.
DifferenceGradient reverse_ift(const DifferenceSystem& sys, std::span<const double> x,
                               const DiscreteTrajectory& trajectory,
                               std::span<const double> alpha);

/// Adjoint recursion λ_steps = 0, λ_i = λ_{i+1} - (∂Δ_i/∂y)ᵀ(α - λ_{i+1}), and
/// ∇ = (∂u/∂x)ᵀ(α - λ_0) + Σ_{i=1..steps} (∂Δ_{i-1}/∂x)ᵀ(α - λ_i).
/// Satisfies γ_i = α - λ_i for every i.
DifferenceGradient reverse_adjoint(const DifferenceSystem& sys, std::span<const double> x,
                                   const DiscreteTrajectory& trajectory,
                                   std::span<const double> alpha);

struct DifferenceTraceResult {
  std::vector<double> gradient;
  std::vector<double> final_state;
  std::size_t tape_length = 0;
};

/// Records the whole simulation on one tape and reverse-sweeps α from y_steps.
DifferenceTraceResult trace_reverse(const DifferenceSystem& sys, std::span<const double> x,
                                    std::span<const double> alpha);

}  // namespace impdiff::difference
