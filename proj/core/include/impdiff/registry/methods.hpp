#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impdiff/registry/registry.hpp"

namespace impdiff::registry {

enum class Method { trace, ift_forward, ift_reverse, adjoint, forward_sens, fd };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view text);

/// Availability matrix:
///
///   kind                      trace  ift-fwd  ift-rev  adjoint  fwd-sens  fd
///   algebraic                   x       x        x        x                x
///   difference                  x                x        x                x
///   optimization                                 x                         x
///   constrained_optimization                     x                         x
///   ode                         x                         x        x       x
///   dae                                          x        x        x       x
///
/// ift-forward and forward-sens assemble the gradient from I forward passes.
/// For DAEs ift-reverse is the reduction route: yᵃ is eliminated by Newton and
/// differentiated by the implicit function theorem inside the ODE adjoint.
/// The ODE trace method runs fixed-step RK4.
std::vector<Method> available_methods(ProblemKind kind);
bool is_available(ProblemKind kind, Method method);

struct GradientResult {
  std::vector<double> gradient;  ///< (d value/dx)ᵀα
  std::vector<double> value;
  std::size_t iterations = 0;
  std::optional<std::string> warning;
};

/// Throws StructuralError when the method is not available for the kind, and
/// propagates solver errors (SingularSystemError, ConvergenceError, ...).
GradientResult gradient(const ProblemSpec& spec, Method method, std::span<const double> x,
                        std::span<const double> alpha, const SolveOptions& opts = {});

/// Pass threshold for a method against the finite-difference oracle:
/// 1e-5 for finite-dimensional kinds, 1e-4 for ODE and DAE.
double gradcheck_tolerance(ProblemKind kind);

/// Documented agreement tolerance between two methods: 1e-10 between IFT and
/// adjoint routes, 1e-6 when the trace method or a time integration
/// separates the two, and the gradcheck tolerance when one side is fd.
double agreement_tolerance(ProblemKind kind, Method a, Method b);

/// max_i |a_i - b_i| / max(1, |b_i|)
double relative_deviation(std::span<const double> a, std::span<const double> b);

/// max over steps i and components of |γ_i - (α - λ_i)| for a difference problem.
double difference_bridge_gap(const ProblemSpec& spec, std::span<const double> x,
                             std::span<const double> alpha);

}  // namespace impdiff::registry
