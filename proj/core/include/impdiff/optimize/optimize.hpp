#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impdiff/ad/var.hpp"
#include "impdiff/algebraic/implicit.hpp"
#include "impdiff/linalg/dense.hpp"

namespace impdiff::optimize {

using ObjectiveFn = std::function<ad::Var(ad::VarSpan x, ad::VarSpan y)>;
using EqualityFn = std::function<ad::VarVector(ad::VarSpan x, ad::VarSpan y)>;

/// y*(x) = argmax_y F(x, y).
struct ObjectiveProblem {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  ObjectiveFn objective;
};

/// y*(x) = argmax_y F(x, y) subject to k(x, y) = 0, solved on the augmented
/// objective Φ = F + μ·k over ζ = (y, μ).
struct ConstrainedProblem {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::size_t constraint_dim = 0;
  ObjectiveFn objective;
  EqualityFn constraints;  ///< may be empty when constraint_dim == 0
};

enum class Definiteness { negative_definite, indefinite, unknown };

std::string_view to_string(Definiteness d);

struct OptimumSolution {
  std::vector<double> y_star;
  std::vector<double> multipliers;  ///< empty for unconstrained problems
  double gradient_norm = 0.0;       ///< ‖∂Φ/∂ζ‖∞ at the solution
  Definiteness hessian_definiteness = Definiteness::unknown;
  std::size_t iterations = 0;
  std::optional<std::string> warning;  ///< set when the point may not be a maximum
};

/// Newton on ∂F/∂y = 0 with halving line search on ‖∂F/∂y‖∞. The Hessian of
/// the final iterate decides `hessian_definiteness`; an indefinite Hessian
/// yields a result carrying a warning rather than an error.
OptimumSolution maximize(const ObjectiveProblem& problem, std::span<const double> x,
                         std::span<const double> y0,
                         const algebraic::NewtonConfig& cfg = {});

/// (dy*/dx)ᵀα: γ = (∂²F/∂y²)⁻ᵀα, result -(∂²F/∂y∂x)ᵀγ evaluated as the x-block of
/// one Hessian-vector product, never forming ∂²F/∂y∂x.
std::vector<double> reverse_unconstrained(const ObjectiveProblem& problem,
                                          std::span<const double> x,
                                          const OptimumSolution& solution,
                                          std::span<const double> alpha);

/// Newton on ∂Φ/∂ζ = 0. `mu0` empty means zeros. Definiteness is judged on the
/// Lagrangian Hessian restricted to the null space of ∂k/∂y.
OptimumSolution maximize_constrained(const ConstrainedProblem& problem,
                                     std::span<const double> x, std::span<const double> y0,
                                     std::span<const double> mu0 = {},
                                     const algebraic::NewtonConfig& cfg = {});

/// β = (α, 0) on ζ, γ = (∂²Φ/∂ζ²)⁻ᵀβ, result -(∂²Φ/∂ζ∂x)ᵀγ by one
/// Hessian-vector product.
std::vector<double> reverse_constrained(const ConstrainedProblem& problem,
                                        std::span<const double> x,
                                        const OptimumSolution& solution,
                                        std::span<const double> alpha);

/// ∂²Φ/∂ζ² at (x, ζ), assembled column by column from Hessian-vector products.
linalg::DenseMatrix stationarity_hessian(const ConstrainedProblem& problem,
                                         std::span<const double> x,
                                         std::span<const double> zeta);

/// View of an unconstrained problem as a constrained one with no constraints.
ConstrainedProblem as_constrained(const ObjectiveProblem& problem);

}  // namespace impdiff::optimize
