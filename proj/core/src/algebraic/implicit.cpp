#include "impdiff/algebraic/implicit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "impdiff/ad/sweeps.hpp"
#include "impdiff/ad/tangent_expressions.hpp"
#include "impdiff/errors.hpp"

namespace impdiff::algebraic {
namespace {

using ad::Tape;
using ad::Var;
using ad::VarVector;
using linalg::DenseMatrix;

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

// Max-norm that treats any non-finite entry as +inf (std::max drops NaN).
double residual_norm_inf(std::span<const double> r) {
  double m = 0.0;
  for (double v : r) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(v));
  }
  return m;
}

std::vector<ad::NodeId> ids_of(const VarVector& vs) {
  std::vector<ad::NodeId> ids;
  ids.reserve(vs.size());
  for (const Var& v : vs) ids.push_back(v.id());
  return ids;
}

VarVector call_constraint(const ConstraintSystem& sys, ad::VarSpan x, ad::VarSpan y) {
  VarVector c = sys.constraint(x, y);
  if (c.size() != sys.output_dim) {
    throw StructuralError("constraint returned " + std::to_string(c.size()) +
                          " components for " + std::to_string(sys.output_dim) +
                          " unknowns");
  }
  return c;
}

VarVector call_summary(const ConstraintSystem& sys, ad::VarSpan y) {
  if (!sys.summary) return VarVector(y.begin(), y.end());
  VarVector g = sys.summary(y);
  expect_size(g.size(), sys.summary_dim, "summary output");
  return g;
}

// Tape with inputs (x, y) and outputs c(x, y).
Tape record_constraint(const ConstraintSystem& sys, std::span<const double> x,
                       std::span<const double> y) {
  expect_size(x.size(), sys.input_dim, "x");
  expect_size(y.size(), sys.output_dim, "y");
  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  const VarVector yv = ad::inputs(tape, y);
  tape.set_outputs(ids_of(call_constraint(sys, xv, yv)));
  return tape;
}

Tape record_summary(const ConstraintSystem& sys, std::span<const double> y) {
  Tape tape;
  const VarVector yv = ad::inputs(tape, y);
  tape.set_outputs(ids_of(call_summary(sys, yv)));
  return tape;
}

std::vector<double> output_values(const Tape& tape) {
  std::vector<double> out;
  out.reserve(tape.outputs().size());
  for (ad::NodeId id : tape.outputs()) out.push_back(tape.node(id).value.value);
  return out;
}

// J sweeps either way; reverse when J ≤ I.
DenseMatrix assemble_c_y(const Tape& tape, std::size_t in_dim, std::size_t out_dim) {
  DenseMatrix c_y(out_dim, out_dim);
  if (out_dim <= in_dim) {
    std::vector<double> seed(out_dim, 0.0);
    for (std::size_t r = 0; r < out_dim; ++r) {
      seed[r] = 1.0;
      const auto row = ad::reverse_sweep(tape, seed);
      std::copy(row.begin() + static_cast<std::ptrdiff_t>(in_dim), row.end(),
                c_y.row(r).begin());
      seed[r] = 0.0;
    }
  } else {
    std::vector<double> seed(in_dim + out_dim, 0.0);
    for (std::size_t c = 0; c < out_dim; ++c) {
      seed[in_dim + c] = 1.0;
      c_y.set_column(c, ad::forward_sweep(tape, seed));
      seed[in_dim + c] = 0.0;
    }
  }
  return c_y;
}

linalg::LuFactors factor_c_y(const DenseMatrix& c_y) {
  auto f = linalg::lu_factor(c_y);
  if (f.singular) {
    throw SingularSystemError(
        "constraint Jacobian singular: implicit function undefined at this point");
  }
  return f;
}

std::vector<double> x_part(std::span<const double> full, std::size_t in_dim) {
  return {full.begin(), full.begin() + static_cast<std::ptrdiff_t>(in_dim)};
}

}  // namespace

std::vector<double> residual(const ConstraintSystem& sys, std::span<const double> x,
                             std::span<const double> y) {
  return output_values(record_constraint(sys, x, y));
}

std::vector<double> summarize(const ConstraintSystem& sys, std::span<const double> y) {
  expect_size(y.size(), sys.output_dim, "y");
  return output_values(record_summary(sys, y));
}

ConstraintJacobians constraint_jacobians(const ConstraintSystem& sys,
                                         std::span<const double> x,
                                         std::span<const double> y) {
  const Tape tape = record_constraint(sys, x, y);
  const DenseMatrix full = ad::jacobian(tape);
  ConstraintJacobians out{DenseMatrix(sys.output_dim, sys.input_dim),
                          DenseMatrix(sys.output_dim, sys.output_dim)};
  for (std::size_t r = 0; r < sys.output_dim; ++r) {
    for (std::size_t c = 0; c < sys.input_dim; ++c) out.c_x(r, c) = full(r, c);
    for (std::size_t c = 0; c < sys.output_dim; ++c) {
      out.c_y(r, c) = full(r, sys.input_dim + c);
    }
  }
  return out;
}

ImplicitSolution newton_solve(const ConstraintSystem& sys, std::span<const double> x,
                              std::span<const double> y0, const NewtonConfig& cfg,
                              bool keep_trace) {
  if (!(cfg.residual_tolerance > 0.0) || cfg.max_iterations < 1) {
    throw StructuralError("newton_solve: tolerance must be positive and max_iterations >= 1");
  }
  ImplicitSolution sol;
  sol.y_star.assign(y0.begin(), y0.end());
  if (keep_trace) sol.iterate_trace = NewtonTrace{{sol.y_star}, {}};

  Tape tape = record_constraint(sys, x, sol.y_star);
  std::vector<double> c = output_values(tape);
  double norm = residual_norm_inf(c);
  if (!std::isfinite(norm)) {
    throw ConvergenceError("newton_solve: residual is not finite at the initial guess", norm,
                           0);
  }

  while (norm > cfg.residual_tolerance) {
    if (sol.iterations >= cfg.max_iterations) {
      throw ConvergenceError("newton_solve: no convergence after " +
                                 std::to_string(sol.iterations) +
                                 " iterations (residual " + std::to_string(norm) + ")",
                             norm, sol.iterations);
    }
    const auto f = linalg::lu_factor(assemble_c_y(tape, sys.input_dim, sys.output_dim));
    if (f.singular) {
      throw SingularSystemError("constraint Jacobian singular at Newton iterate " +
                                std::to_string(sol.iterations));
    }
    const std::vector<double> step = linalg::lu_solve(f, c);

    double scale = cfg.initial_step;
    std::vector<double> trial(step.size());
    bool accepted = false;
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h, scale *= 0.5) {
      for (std::size_t k = 0; k < trial.size(); ++k) {
        trial[k] = sol.y_star[k] - scale * step[k];
      }
      Tape trial_tape = record_constraint(sys, x, trial);
      std::vector<double> trial_c = output_values(trial_tape);
      const double trial_norm = residual_norm_inf(trial_c);
      if (trial_norm < norm || trial_norm <= cfg.residual_tolerance) {
        tape = std::move(trial_tape);
        c = std::move(trial_c);
        norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("newton_solve: line search failed at iteration " +
                                 std::to_string(sol.iterations),
                             norm, sol.iterations);
    }
    sol.y_star = trial;
    ++sol.iterations;
    if (keep_trace) {
      sol.iterate_trace->iterates.push_back(sol.y_star);
      sol.iterate_trace->step_scales.push_back(scale);
    }
  }
  sol.residual_norm = norm;
  return sol;
}

std::vector<double> ift_forward(const ConstraintSystem& sys, std::span<const double> x,
                                std::span<const double> y_star,
                                std::span<const double> v) {
  expect_size(v.size(), sys.input_dim, "tangent v");
  const Tape tape = record_constraint(sys, x, y_star);
  std::vector<double> seed(v.begin(), v.end());
  seed.resize(sys.input_dim + sys.output_dim, 0.0);
  const std::vector<double> u = ad::forward_sweep(tape, seed);
  const auto f = factor_c_y(assemble_c_y(tape, sys.input_dim, sys.output_dim));
  const std::vector<double> t = linalg::lu_solve(f, u);
  std::vector<double> out = ad::forward_sweep(record_summary(sys, y_star), t);
  for (double& e : out) e = -e;
  return out;
}

std::vector<double> ift_reverse(const ConstraintSystem& sys, std::span<const double> x,
                                std::span<const double> y_star,
                                std::span<const double> alpha) {
  expect_size(alpha.size(), sys.effective_summary_dim(), "cotangent alpha");
  expect_size(y_star.size(), sys.output_dim, "y");
  const std::vector<double> beta = ad::reverse_sweep(record_summary(sys, y_star), alpha);
  const Tape tape = record_constraint(sys, x, y_star);
  const auto f = factor_c_y(assemble_c_y(tape, sys.input_dim, sys.output_dim));
  const std::vector<double> gamma = linalg::lu_solve(f, beta, linalg::Transpose::yes);
  std::vector<double> out = x_part(ad::reverse_sweep(tape, gamma), sys.input_dim);
  for (double& e : out) e = -e;
  return out;
}

AdjointResult adjoint_reverse(const ConstraintSystem& sys, std::span<const double> x,
                              std::span<const double> y_star,
                              std::span<const double> alpha) {
  expect_size(alpha.size(), sys.effective_summary_dim(), "cotangent alpha");
  expect_size(y_star.size(), sys.output_dim, "y");
  // A non-identity summary enters as its pulled-back cotangent.
  std::vector<double> a(alpha.begin(), alpha.end());
  if (sys.summary) a = ad::reverse_sweep(record_summary(sys, y_star), alpha);
  const Tape tape = record_constraint(sys, x, y_star);
  const auto f = factor_c_y(assemble_c_y(tape, sys.input_dim, sys.output_dim));
  AdjointResult res;
  res.multipliers = linalg::lu_solve(f, a, linalg::Transpose::yes);
  for (double& l : res.multipliers) l = -l;
  res.gradient = x_part(ad::reverse_sweep(tape, res.multipliers), sys.input_dim);
  return res;
}

namespace {

// Solves M z = b in Var arithmetic by Gaussian elimination, choosing pivots by
// value. The pivot sequence is frozen into the recorded expression.
VarVector eliminate(Tape& tape, std::vector<std::vector<Var>> m, VarVector b) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (const auto& row : m) {
    for (const Var& e : row) scale = std::max(scale, std::abs(e.value()));
  }
  const double threshold = linalg::kSingularPivotRatio * scale;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(m[r][k].value()) > std::abs(m[p][k].value())) p = r;
    }
    const double best = std::abs(m[p][k].value());
    if (best <= threshold || best == 0.0) {
      throw SingularSystemError("constraint Jacobian singular while recording the trace");
    }
    std::swap(m[k], m[p]);
    std::swap(b[k], b[p]);
    for (std::size_t r = k + 1; r < n; ++r) {
      if (m[r][k].value() == 0.0 && m[r][k].tangent() == 0.0 &&
          tape.node(m[r][k].id()).op == ad::OpKind::constant) {
        continue;
      }
      const Var l = m[r][k] / m[k][k];
      for (std::size_t c = k + 1; c < n; ++c) m[r][c] = m[r][c] - l * m[k][c];
      b[r] = b[r] - l * b[k];
    }
  }
  VarVector z(n);
  for (std::size_t i = n; i-- > 0;) {
    Var acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc = acc - m[i][j] * z[j];
    z[i] = acc / m[i][i];
  }
  return z;
}

}  // namespace

TraceResult trace_reverse(const ConstraintSystem& sys, std::span<const double> x,
                          std::span<const double> y0, const NewtonConfig& cfg,
                          std::span<const double> alpha) {
  expect_size(alpha.size(), sys.effective_summary_dim(), "cotangent alpha");
  const ImplicitSolution sol = newton_solve(sys, x, y0, cfg, /*keep_trace=*/true);
  // The trace derivative is meaningless where the implicit function is undefined.
  factor_c_y(constraint_jacobians(sys, x, sol.y_star).c_y);

  const std::size_t n = sys.output_dim;
  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  VarVector yv;
  yv.reserve(n);
  for (double v : y0) yv.push_back(ad::constant(tape, v));
  const Var one = ad::constant(tape, 1.0);
  const Var zero = ad::constant(tape, 0.0);

  for (double step_scale : sol.iterate_trace->step_scales) {
    const VarVector c = call_constraint(sys, xv, yv);
    std::vector<std::vector<Var>> m(n, std::vector<Var>(n, zero));
    for (std::size_t j = 0; j < n; ++j) {
      // Fresh copy of c per column so each tangent walk covers only its own segment.
      const auto seg = static_cast<ad::NodeId>(tape.size());
      const VarVector cj = call_constraint(sys, xv, yv);
      const std::pair<ad::NodeId, Var> seed{yv[j].id(), one};
      const auto col = ad::tangent_expressions(tape, seg, std::span(&seed, 1), cj);
      for (std::size_t r = 0; r < n; ++r) {
        if (col[r]) m[r][j] = *col[r];
      }
    }
    const VarVector z = eliminate(tape, std::move(m), c);
    for (std::size_t k = 0; k < n; ++k) yv[k] = yv[k] - step_scale * z[k];
  }

  const VarVector out = call_summary(sys, yv);
  tape.set_outputs(ids_of(out));
  TraceResult res;
  res.gradient = ad::reverse_sweep(tape, alpha);
  res.value = ad::values(out);
  res.tape_length = tape.size();
  res.iterations = sol.iterations;
  return res;
}

}  // namespace impdiff::algebraic
