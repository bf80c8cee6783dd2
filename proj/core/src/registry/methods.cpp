#include "impdiff/registry/methods.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "impdiff/errors.hpp"

namespace impdiff::registry {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::trace, "trace"},
    {Method::ift_forward, "ift-forward"},
    {Method::ift_reverse, "ift-reverse"},
    {Method::adjoint, "adjoint"},
    {Method::forward_sens, "forward-sens"},
    {Method::fd, "fd"},
}};

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void expect_alpha(const ProblemSpec& spec, std::span<const double> alpha) {
  if (alpha.size() != spec.dims.output) {
    throw StructuralError(spec.name + ": alpha needs " + std::to_string(spec.dims.output) +
                          " components, got " + std::to_string(alpha.size()));
  }
}

ode::IntegratorConfig trace_config(const SolveOptions& opts) {
  ode::IntegratorConfig c = opts.integrator;
  c.method = ode::Method::rk4_fixed;
  c.step_size = opts.trace_step_size;
  return c;
}

GradientResult finite_difference(const ProblemSpec& spec, std::span<const double> x,
                                 std::span<const double> alpha, const SolveOptions& opts) {
  SolveOptions inner = opts;
  inner.integrator = opts.fd_integrator;
  GradientResult res;
  const Solution base = solve(spec, x, opts);
  res.value = base.value;
  res.iterations = base.iterations;
  res.warning = base.warning;
  std::vector<double> xp(x.begin(), x.end());
  res.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = opts.fd_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = dot(alpha, solve(spec, xp, inner).value);
    xp[i] = x[i] - h;
    const double fm = dot(alpha, solve(spec, xp, inner).value);
    xp[i] = x[i];
    res.gradient[i] = (fp - fm) / (2.0 * h);
  }
  return res;
}

// Gradient from I forward passes, one unit direction each.
template <class Forward>
std::vector<double> by_columns(std::size_t inputs, std::span<const double> alpha,
                               Forward&& forward) {
  std::vector<double> g(inputs), v(inputs, 0.0);
  for (std::size_t i = 0; i < inputs; ++i) {
    v[i] = 1.0;
    g[i] = dot(alpha, forward(std::span<const double>(v)));
    v[i] = 0.0;
  }
  return g;
}

GradientResult algebraic_gradient(const ProblemSpec& spec, Method method,
                                  std::span<const double> x, std::span<const double> alpha) {
  const auto& sys = *spec.algebraic;
  GradientResult res;
  const auto y0 = spec.initial_guess(x);
  if (method == Method::trace) {
    auto t = algebraic::trace_reverse(sys, x, y0, spec.newton, alpha);
    res.gradient = std::move(t.gradient);
    res.value = std::move(t.value);
    res.iterations = t.iterations;
    return res;
  }
  const auto sol = algebraic::newton_solve(sys, x, y0, spec.newton);
  res.value = algebraic::summarize(sys, sol.y_star);
  res.iterations = sol.iterations;
  switch (method) {
    case Method::ift_forward:
      res.gradient = by_columns(x.size(), alpha, [&](std::span<const double> v) {
        return algebraic::ift_forward(sys, x, sol.y_star, v);
      });
      break;
    case Method::ift_reverse:
      res.gradient = algebraic::ift_reverse(sys, x, sol.y_star, alpha);
      break;
    default:
      res.gradient = algebraic::adjoint_reverse(sys, x, sol.y_star, alpha).gradient;
      break;
  }
  return res;
}

GradientResult difference_gradient(const ProblemSpec& spec, Method method,
                                   std::span<const double> x, std::span<const double> alpha) {
  const auto& sys = *spec.difference;
  GradientResult res;
  res.iterations = sys.steps;
  if (method == Method::trace) {
    auto t = difference::trace_reverse(sys, x, alpha);
    res.gradient = std::move(t.gradient);
    res.value = std::move(t.final_state);
    return res;
  }
  const auto traj = difference::simulate(sys, x);
  res.value = traj.final_state();
  res.gradient = method == Method::ift_reverse
                     ? difference::reverse_ift(sys, x, traj, alpha).gradient
                     : difference::reverse_adjoint(sys, x, traj, alpha).gradient;
  return res;
}

GradientResult optimization_gradient(const ProblemSpec& spec, std::span<const double> x,
                                     std::span<const double> alpha) {
  GradientResult res;
  optimize::OptimumSolution sol;
  if (spec.kind == ProblemKind::optimization) {
    sol = optimize::maximize(*spec.objective, x, spec.initial_guess(x), spec.newton);
    res.gradient = optimize::reverse_unconstrained(*spec.objective, x, sol, alpha);
  } else {
    sol = optimize::maximize_constrained(*spec.constrained, x, spec.initial_guess(x),
                                         spec.default_mu0, spec.newton);
    res.gradient = optimize::reverse_constrained(*spec.constrained, x, sol, alpha);
  }
  res.value = sol.y_star;
  res.iterations = sol.iterations;
  res.warning = sol.warning;
  return res;
}

GradientResult ode_gradient(const ProblemSpec& spec, Method method, std::span<const double> x,
                            std::span<const double> alpha, const SolveOptions& opts) {
  const auto& sys = *spec.ode;
  GradientResult res;
  switch (method) {
    case Method::trace: {
      auto t = ode::trace_reverse_ode(sys, x, trace_config(opts), alpha);
      res.gradient = std::move(t.gradient);
      res.value = std::move(t.final_state);
      res.iterations = t.steps;
      break;
    }
    case Method::forward_sens: {
      auto f = ode::forward_sensitivity(sys, x, opts.integrator);
      res.gradient = f.sensitivity.multiply_transposed(alpha);
      res.value = std::move(f.final_state);
      res.iterations = f.stats.steps;
      break;
    }
    default: {
      ode::AdvanceStats stats;
      const auto traj = ode::integrate(sys, x, opts.integrator, &stats);
      res.gradient = ode::adjoint_reverse(sys, x, traj, alpha, opts.integrator).gradient;
      res.value = traj.final_state();
      res.iterations = stats.steps;
      break;
    }
  }
  return res;
}

GradientResult dae_gradient(const ProblemSpec& spec, Method method, std::span<const double> x,
                            std::span<const double> alpha, const SolveOptions& opts) {
  const auto& sys = *spec.dae;
  GradientResult res;
  ode::AdvanceStats stats;
  const auto traj = dae::dae_integrate(sys, x, opts.integrator, &stats);
  res.value = traj.final_state();
  res.iterations = stats.steps;
  switch (method) {
    case Method::ift_reverse:
      res.gradient = dae::reduction_gradient(sys, x, alpha, opts.integrator);
      break;
    case Method::forward_sens:
      res.gradient = dae::dae_forward_sensitivity(sys, x, opts.integrator).multiply_transposed(alpha);
      break;
    default:
      res.gradient = dae::dae_adjoint_reverse(sys, x, traj, alpha, opts.integrator).gradient;
      break;
  }
  return res;
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view text) {
  for (const auto& [m, name] : kMethodNames) {
    if (name == text) return m;
  }
  return std::nullopt;
}

std::vector<Method> available_methods(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::algebraic:
      return {Method::trace, Method::ift_forward, Method::ift_reverse, Method::adjoint, Method::fd};
    case ProblemKind::difference:
      return {Method::trace, Method::ift_reverse, Method::adjoint, Method::fd};
    case ProblemKind::optimization:
    case ProblemKind::constrained_optimization:
      return {Method::ift_reverse, Method::fd};
    case ProblemKind::ode:
      return {Method::trace, Method::adjoint, Method::forward_sens, Method::fd};
    case ProblemKind::dae:
      return {Method::ift_reverse, Method::adjoint, Method::forward_sens, Method::fd};
  }
  return {};
}

bool is_available(ProblemKind kind, Method method) {
  const auto m = available_methods(kind);
  return std::find(m.begin(), m.end(), method) != m.end();
}

GradientResult gradient(const ProblemSpec& spec, Method method, std::span<const double> x,
                        std::span<const double> alpha, const SolveOptions& opts) {
  if (!is_available(spec.kind, method)) {
    throw StructuralError("method '" + std::string(to_string(method)) +
                          "' is not available for " + std::string(to_string(spec.kind)) +
                          " problems");
  }
  if (x.size() != spec.dims.input) {
    throw StructuralError(spec.name + ": expected " + std::to_string(spec.dims.input) +
                          " inputs, got " + std::to_string(x.size()));
  }
  expect_alpha(spec, alpha);
  if (method == Method::fd) return finite_difference(spec, x, alpha, opts);
  switch (spec.kind) {
    case ProblemKind::algebraic:
      return algebraic_gradient(spec, method, x, alpha);
    case ProblemKind::difference:
      return difference_gradient(spec, method, x, alpha);
    case ProblemKind::optimization:
    case ProblemKind::constrained_optimization:
      return optimization_gradient(spec, x, alpha);
    case ProblemKind::ode:
      return ode_gradient(spec, method, x, alpha, opts);
    case ProblemKind::dae:
      return dae_gradient(spec, method, x, alpha, opts);
  }
  throw StructuralError("unhandled problem kind");
}

double gradcheck_tolerance(ProblemKind kind) {
  return kind == ProblemKind::ode || kind == ProblemKind::dae ? 1e-4 : 1e-5;
}

double agreement_tolerance(ProblemKind kind, Method a, Method b) {
  if (a == Method::fd || b == Method::fd) return gradcheck_tolerance(kind);
  if (a == Method::trace || b == Method::trace) return 1e-6;
  if (kind == ProblemKind::ode || kind == ProblemKind::dae) return 1e-6;
  return 1e-10;
}

double relative_deviation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StructuralError("relative_deviation: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return m;
}

double difference_bridge_gap(const ProblemSpec& spec, std::span<const double> x,
                             std::span<const double> alpha) {
  if (!spec.difference) throw StructuralError(spec.name + " is not a difference problem");
  expect_alpha(spec, alpha);
  const auto& sys = *spec.difference;
  const auto traj = difference::simulate(sys, x);
  const auto g = difference::reverse_ift(sys, x, traj, alpha);
  const auto l = difference::reverse_adjoint(sys, x, traj, alpha);
  double gap = 0.0;
  for (std::size_t i = 0; i < g.multipliers.size(); ++i) {
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      gap = std::max(gap, std::abs(g.multipliers[i][k] - (alpha[k] - l.multipliers[i][k])));
    }
  }
  return gap;
}

}  // namespace impdiff::registry
