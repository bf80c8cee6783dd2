#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impdiff/algebraic/implicit.hpp"
#include "impdiff/dae/dae.hpp"
#include "impdiff/difference/difference.hpp"
#include "impdiff/linalg/dense.hpp"
#include "impdiff/ode/ode.hpp"
#include "impdiff/optimize/optimize.hpp"

namespace impdiff::registry {

enum class ProblemKind { algebraic, difference, optimization, constrained_optimization, ode, dae };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_kind(std::string_view text);

/// input = I; output = J (algebraic, optimization) or N (trajectories);
/// constraints = K for constrained optimization, A for DAEs, else 0.
struct Dimensions {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t constraints = 0;
};

/// Dimension overrides for scaling studies. Only some problems accept them.
struct Overrides {
  std::optional<std::size_t> state_dim;
  std::optional<std::size_t> input_dim;
  std::optional<std::size_t> steps;

  bool empty() const { return !state_dim && !input_dim && !steps; }
};

using GuessFn = std::function<std::vector<double>(std::span<const double> x)>;
/// d value / dx at x, output × input.
using JacobianFn = std::function<linalg::DenseMatrix(std::span<const double> x)>;

/// Exactly one of the program members is set, matching `kind`.
struct ProblemSpec {
  std::string name;
  ProblemKind kind = ProblemKind::algebraic;
  std::string description;
  Dimensions dims;
  std::vector<double> default_x;
  GuessFn default_y0;               ///< algebraic and optimization starting points
  std::vector<double> default_mu0;  ///< constrained optimization; empty means zeros
  JacobianFn analytic_jacobian;     ///< empty when no closed form is known
  algebraic::NewtonConfig newton;

  std::optional<algebraic::ConstraintSystem> algebraic;
  std::optional<difference::DifferenceSystem> difference;
  std::optional<optimize::ObjectiveProblem> objective;
  std::optional<optimize::ConstrainedProblem> constrained;
  std::optional<ode::OdeSystem> ode;
  std::optional<dae::DaeSystem> dae;

  std::vector<double> initial_guess(std::span<const double> x) const;
};

struct ProblemInfo {
  std::string name;
  ProblemKind kind;
  std::string description;
  std::vector<std::string> override_keys;  ///< subset of {state_dim, input_dim, steps}
};

/// Builds the named problem. Throws NotFoundError listing every registered
/// name, and StructuralError for overrides the problem does not accept.
/// The first call runs the analytic-vs-finite-difference self-check on every
/// problem with a closed form and throws std::logic_error if one fails.
ProblemSpec lookup(std::string_view name, const Overrides& overrides = {});

/// Alphabetical by name.
std::vector<ProblemInfo> enumerate();

/// Forward-problem solution at x.
struct Solution {
  std::vector<double> value;
  std::size_t iterations = 0;  ///< Newton iterations, difference steps, or accepted ODE steps
  std::optional<std::string> warning;
};

struct SolveOptions {
  ode::IntegratorConfig integrator;
  /// Used for the re-solves of the finite-difference oracle.
  ode::IntegratorConfig fd_integrator = [] {
    ode::IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    return c;
  }();
  double fd_step = 1e-6;          ///< h = fd_step·max(1, |x_i|)
  double trace_step_size = 1e-3;  ///< RK4 step for the ODE trace method
};

Solution solve(const ProblemSpec& spec, std::span<const double> x, const SolveOptions& opts = {});

/// Largest |analytic - fd| / max(1, |fd|) over the Jacobian at x, central
/// differences of width h_rel·max(1, |x_i|). Throws StructuralError when the
/// spec has no analytic Jacobian.
double analytic_self_check(const ProblemSpec& spec, std::span<const double> x,
                           double h_rel = 1e-6);

}  // namespace impdiff::registry
