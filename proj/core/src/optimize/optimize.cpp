#include "impdiff/optimize/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "impdiff/ad/sweeps.hpp"
#include "impdiff/errors.hpp"

namespace impdiff::optimize {
namespace {

using ad::Var;
using ad::VarSpan;
using linalg::DenseMatrix;

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

void validate(const ConstrainedProblem& p) {
  if (!p.objective) throw StructuralError("optimization problem has no objective");
  if (p.constraint_dim > p.output_dim) {
    throw StructuralError("more equality constraints than unknowns");
  }
  if (p.constraint_dim > 0 && !p.constraints) {
    throw StructuralError("constraint_dim > 0 but no constraint function");
  }
}

// Φ over w = (x, y, μ).
ad::ScalarProgram augmented(const ConstrainedProblem& p) {
  return [&p](VarSpan w) {
    const VarSpan x = w.subspan(0, p.input_dim);
    const VarSpan y = w.subspan(p.input_dim, p.output_dim);
    Var phi = p.objective(x, y);
    if (p.constraint_dim > 0) {
      const VarSpan mu = w.subspan(p.input_dim + p.output_dim, p.constraint_dim);
      const ad::VarVector k = p.constraints(x, y);
      expect_size(k.size(), p.constraint_dim, "constraint output");
      for (std::size_t i = 0; i < k.size(); ++i) phi = phi + mu[i] * k[i];
    }
    return phi;
  };
}

std::vector<double> join(std::span<const double> x, std::span<const double> zeta) {
  std::vector<double> w(x.begin(), x.end());
  w.insert(w.end(), zeta.begin(), zeta.end());
  return w;
}

std::vector<double> stationarity(const ConstrainedProblem& p, std::span<const double> x,
                                 std::span<const double> zeta) {
  const auto g = ad::gradient(augmented(p), join(x, zeta));
  return {g.begin() + static_cast<std::ptrdiff_t>(p.input_dim), g.end()};
}

double norm_or_inf(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) {
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(e));
  }
  return m;
}

bool negative_definite(const DenseMatrix& h) {
  // Cholesky on -h.
  const std::size_t n = h.rows();
  DenseMatrix l(n, n);
  const double floor = 1e-14 * std::max(1.0, h.max_abs());
  for (std::size_t j = 0; j < n; ++j) {
    double d = -h(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = -h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

// Orthonormal basis of {z : A z = 0} for A of full row rank, as columns.
std::optional<DenseMatrix> null_space(const DenseMatrix& a) {
  const std::size_t k = a.rows();
  const std::size_t n = a.cols();
  std::vector<std::vector<double>> basis;
  auto project_out = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) {
        const double c = linalg::dot(q, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= c * q[i];
      }
    }
  };
  auto norm2 = [](std::span<const double> v) { return std::sqrt(linalg::dot(v, v)); };

  for (std::size_t r = 0; r < k; ++r) {
    std::vector<double> v(a.row(r).begin(), a.row(r).end());
    const double before = norm2(v);
    project_out(v);
    const double after = norm2(v);
    if (before == 0.0 || after <= 1e-10 * before) return std::nullopt;
    for (double& e : v) e /= after;
    basis.push_back(std::move(v));
  }
  DenseMatrix z(n, n - k);
  std::size_t found = 0;
  for (std::size_t i = 0; i < n && found < n - k; ++i) {
    std::vector<double> v(n, 0.0);
    v[i] = 1.0;
    project_out(v);
    const double len = norm2(v);
    if (len <= 1e-8) continue;
    for (double& e : v) e /= len;
    z.set_column(found++, v);
    basis.push_back(std::move(v));
  }
  if (found != n - k) return std::nullopt;
  return z;
}

Definiteness classify(const DenseMatrix& h, std::size_t j_dim, std::size_t k_dim) {
  DenseMatrix hyy(j_dim, j_dim);
  for (std::size_t r = 0; r < j_dim; ++r) {
    for (std::size_t c = 0; c < j_dim; ++c) hyy(r, c) = h(r, c);
  }
  if (k_dim == 0) {
    return negative_definite(hyy) ? Definiteness::negative_definite
                                  : Definiteness::indefinite;
  }
  DenseMatrix a(k_dim, j_dim);
  for (std::size_t r = 0; r < k_dim; ++r) {
    for (std::size_t c = 0; c < j_dim; ++c) a(r, c) = h(j_dim + r, c);
  }
  const auto z = null_space(a);
  if (!z) return Definiteness::unknown;
  const DenseMatrix reduced = z->transposed() * hyy * *z;
  return negative_definite(reduced) ? Definiteness::negative_definite
                                    : Definiteness::indefinite;
}

}  // namespace

std::string_view to_string(Definiteness d) {
  switch (d) {
    case Definiteness::negative_definite: return "negative_definite";
    case Definiteness::indefinite: return "indefinite";
    case Definiteness::unknown: return "unknown";
  }
  return "unknown";
}

ConstrainedProblem as_constrained(const ObjectiveProblem& problem) {
  return {problem.input_dim, problem.output_dim, 0, problem.objective, {}};
}

DenseMatrix stationarity_hessian(const ConstrainedProblem& problem, std::span<const double> x,
                                 std::span<const double> zeta) {
  validate(problem);
  const std::size_t n = problem.output_dim + problem.constraint_dim;
  expect_size(x.size(), problem.input_dim, "x");
  expect_size(zeta.size(), n, "zeta");
  const auto program = augmented(problem);
  const auto w = join(x, zeta);
  DenseMatrix h(n, n);
  std::vector<double> v(w.size(), 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    v[problem.input_dim + c] = 1.0;
    const auto hv = ad::hessian_vector(program, w, v);
    v[problem.input_dim + c] = 0.0;
    for (std::size_t r = 0; r < n; ++r) h(r, c) = hv[problem.input_dim + r];
  }
  return h;
}

OptimumSolution maximize_constrained(const ConstrainedProblem& problem,
                                     std::span<const double> x, std::span<const double> y0,
                                     std::span<const double> mu0,
                                     const algebraic::NewtonConfig& cfg) {
  validate(problem);
  expect_size(x.size(), problem.input_dim, "x");
  expect_size(y0.size(), problem.output_dim, "y0");
  if (!mu0.empty()) expect_size(mu0.size(), problem.constraint_dim, "mu0");

  std::vector<double> zeta(y0.begin(), y0.end());
  if (mu0.empty()) {
    zeta.resize(problem.output_dim + problem.constraint_dim, 0.0);
  } else {
    zeta.insert(zeta.end(), mu0.begin(), mu0.end());
  }

  std::vector<double> g = stationarity(problem, x, zeta);
  double norm = norm_or_inf(g);
  if (!std::isfinite(norm)) {
    throw ConvergenceError("maximize: gradient is not finite at the initial guess", norm, 0);
  }
  std::size_t iterations = 0;
  DenseMatrix h = stationarity_hessian(problem, x, zeta);
  while (norm > cfg.residual_tolerance) {
    if (iterations >= cfg.max_iterations) {
      throw ConvergenceError("maximize: no convergence after " + std::to_string(iterations) +
                                 " iterations",
                             norm, iterations);
    }
    const auto f = linalg::lu_factor(h);
    if (f.singular) {
      throw SingularSystemError("stationarity Hessian singular at Newton iterate " +
                                std::to_string(iterations));
    }
    const auto step = linalg::lu_solve(f, g);
    double scale = cfg.initial_step;
    bool accepted = false;
    std::vector<double> trial(zeta.size());
    for (std::size_t k = 0; k <= cfg.max_halvings; ++k, scale *= 0.5) {
      for (std::size_t i = 0; i < zeta.size(); ++i) trial[i] = zeta[i] - scale * step[i];
      auto trial_g = stationarity(problem, x, trial);
      const double trial_norm = norm_or_inf(trial_g);
      if (trial_norm < norm || trial_norm <= cfg.residual_tolerance) {
        zeta = trial;
        g = std::move(trial_g);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("maximize: line search failed at iteration " +
                                 std::to_string(iterations),
                             norm, iterations);
    }
    ++iterations;
    h = stationarity_hessian(problem, x, zeta);
  }

  OptimumSolution sol;
  sol.y_star.assign(zeta.begin(), zeta.begin() + static_cast<std::ptrdiff_t>(problem.output_dim));
  sol.multipliers.assign(zeta.begin() + static_cast<std::ptrdiff_t>(problem.output_dim),
                         zeta.end());
  sol.gradient_norm = norm;
  sol.iterations = iterations;
  sol.hessian_definiteness = classify(h, problem.output_dim, problem.constraint_dim);
  if (sol.hessian_definiteness == Definiteness::indefinite) {
    sol.warning =
        "Hessian is indefinite at the stationary point; it may not be a maximum";
  } else if (sol.hessian_definiteness == Definiteness::unknown) {
    sol.warning = "could not decide definiteness: constraint gradients are degenerate";
  }
  return sol;
}

OptimumSolution maximize(const ObjectiveProblem& problem, std::span<const double> x,
                         std::span<const double> y0, const algebraic::NewtonConfig& cfg) {
  return maximize_constrained(as_constrained(problem), x, y0, {}, cfg);
}

std::vector<double> reverse_constrained(const ConstrainedProblem& problem,
                                        std::span<const double> x,
                                        const OptimumSolution& solution,
                                        std::span<const double> alpha) {
  validate(problem);
  expect_size(alpha.size(), problem.output_dim, "alpha");
  expect_size(solution.y_star.size(), problem.output_dim, "y_star");
  expect_size(solution.multipliers.size(), problem.constraint_dim, "multipliers");
  std::vector<double> zeta = solution.y_star;
  zeta.insert(zeta.end(), solution.multipliers.begin(), solution.multipliers.end());

  std::vector<double> beta(alpha.begin(), alpha.end());
  beta.resize(zeta.size(), 0.0);
  const auto f = linalg::lu_factor(stationarity_hessian(problem, x, zeta));
  if (f.singular) {
    throw SingularSystemError(
        "stationarity Hessian singular: implicit function undefined at this optimum");
  }
  const auto gamma = linalg::lu_solve(f, beta, linalg::Transpose::yes);

  std::vector<double> v(problem.input_dim, 0.0);
  v.insert(v.end(), gamma.begin(), gamma.end());
  const auto hv = ad::hessian_vector(augmented(problem), join(x, zeta), v);
  std::vector<double> out(hv.begin(), hv.begin() + static_cast<std::ptrdiff_t>(problem.input_dim));
  for (double& e : out) e = -e;
  return out;
}

std::vector<double> reverse_unconstrained(const ObjectiveProblem& problem,
                                          std::span<const double> x,
                                          const OptimumSolution& solution,
                                          std::span<const double> alpha) {
  return reverse_constrained(as_constrained(problem), x, solution, alpha);
}

}  // namespace impdiff::optimize
