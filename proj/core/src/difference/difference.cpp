#include "impdiff/difference/difference.hpp"

#include <cmath>
#include <string>

#include "impdiff/ad/sweeps.hpp"
#include "impdiff/errors.hpp"

namespace impdiff::difference {
namespace {

using ad::Tape;
using ad::VarVector;

void expect_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw StructuralError(std::string(what) + ": expected length " + std::to_string(want) +
                          ", got " + std::to_string(got));
  }
}

void validate(const DifferenceSystem& sys, std::span<const double> x) {
  if (sys.steps < 1) throw StructuralError("difference system needs at least one step");
  if (!sys.delta || !sys.initial) {
    throw StructuralError("difference system is missing delta or initial");
  }
  expect_size(x.size(), sys.input_dim, "x");
}

void set_outputs(Tape& tape, const VarVector& out) {
  std::vector<ad::NodeId> ids;
  ids.reserve(out.size());
  for (const auto& v : out) ids.push_back(v.id());
  tape.set_outputs(std::move(ids));
}

// Tape with inputs (y_i, x) and outputs Δ(y_i, x, i).
void record_step(Tape& tape, const DifferenceSystem& sys, std::span<const double> y,
                 std::span<const double> x, std::size_t step) {
  tape.clear();
  const VarVector yv = ad::inputs(tape, y);
  const VarVector xv = ad::inputs(tape, x);
  const VarVector d = sys.delta(yv, xv, step);
  expect_size(d.size(), sys.state_dim, "delta output");
  set_outputs(tape, d);
}

void record_initial(Tape& tape, const DifferenceSystem& sys, std::span<const double> x) {
  tape.clear();
  const VarVector xv = ad::inputs(tape, x);
  const VarVector u = sys.initial(xv);
  expect_size(u.size(), sys.state_dim, "initial state");
  set_outputs(tape, u);
}

void check_trajectory(const DifferenceSystem& sys, const DiscreteTrajectory& t) {
  if (t.states.size() != sys.steps + 1) {
    throw StructuralError("trajectory has " + std::to_string(t.states.size()) +
                          " states, expected " + std::to_string(sys.steps + 1));
  }
}

// Shared backward pass. `adjoint` selects which cotangent is stored and how it
// is carried; the sweep sequence is identical.
DifferenceGradient backward(const DifferenceSystem& sys, std::span<const double> x,
                            const DiscreteTrajectory& traj, std::span<const double> alpha,
                            bool adjoint) {
  validate(sys, x);
  check_trajectory(sys, traj);
  expect_size(alpha.size(), sys.state_dim, "alpha");
  const std::size_t n = sys.state_dim;
  const std::size_t steps = sys.steps;

  DifferenceGradient out;
  out.gradient.assign(sys.input_dim, 0.0);
  out.multipliers.assign(steps + 1, std::vector<double>(n, 0.0));
  if (!adjoint) out.multipliers[steps].assign(alpha.begin(), alpha.end());

  Tape tape;
  std::vector<double> w(n);
  for (std::size_t i = steps; i-- > 0;) {
    const auto& next = out.multipliers[i + 1];
    // w is the cotangent on Δ_i: γ_{i+1}, or α - λ_{i+1}.
    for (std::size_t k = 0; k < n; ++k) w[k] = adjoint ? alpha[k] - next[k] : next[k];
    record_step(tape, sys, traj.states[i], x, i);
    const auto adj = ad::reverse_sweep(tape, w);
    ++out.sweeps;
    auto& cur = out.multipliers[i];
    for (std::size_t k = 0; k < n; ++k) {
      cur[k] = adjoint ? next[k] - adj[k] : next[k] + adj[k];
    }
    for (std::size_t k = 0; k < sys.input_dim; ++k) out.gradient[k] += adj[n + k];
  }

  for (std::size_t k = 0; k < n; ++k) {
    w[k] = adjoint ? alpha[k] - out.multipliers[0][k] : out.multipliers[0][k];
  }
  record_initial(tape, sys, x);
  const auto ux = ad::reverse_sweep(tape, w);
  ++out.sweeps;
  for (std::size_t k = 0; k < sys.input_dim; ++k) out.gradient[k] += ux[k];
  return out;
}

}  // namespace

DiscreteTrajectory simulate(const DifferenceSystem& sys, std::span<const double> x) {
  validate(sys, x);
  DiscreteTrajectory traj;
  traj.states.reserve(sys.steps + 1);
  Tape tape;
  record_initial(tape, sys, x);
  {
    std::vector<double> y0;
    for (ad::NodeId id : tape.outputs()) y0.push_back(tape.node(id).value.value);
    traj.states.push_back(std::move(y0));
  }
  auto check = [](std::span<const double> y, std::size_t step) {
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw DivergenceError(step, "trajectory diverged: non-finite state at step " +
                                        std::to_string(step));
      }
    }
  };
  check(traj.states[0], 0);
  for (std::size_t i = 0; i < sys.steps; ++i) {
    record_step(tape, sys, traj.states[i], x, i);
    std::vector<double> next = traj.states[i];
    const auto outs = tape.outputs();
    for (std::size_t k = 0; k < sys.state_dim; ++k) next[k] += tape.node(outs[k]).value.value;
    check(next, i + 1);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

DifferenceGradient reverse_ift(const DifferenceSystem& sys, std::span<const double> x,
                               const DiscreteTrajectory& trajectory,
                               std::span<const double> alpha) {
  return backward(sys, x, trajectory, alpha, /*adjoint=*/false);
}

DifferenceGradient reverse_adjoint(const DifferenceSystem& sys, std::span<const double> x,
                                   const DiscreteTrajectory& trajectory,
                                   std::span<const double> alpha) {
  return backward(sys, x, trajectory, alpha, /*adjoint=*/true);
}

DifferenceTraceResult trace_reverse(const DifferenceSystem& sys, std::span<const double> x,
                                    std::span<const double> alpha) {
  validate(sys, x);
  expect_size(alpha.size(), sys.state_dim, "alpha");
  Tape tape;
  const VarVector xv = ad::inputs(tape, x);
  VarVector y = sys.initial(xv);
  expect_size(y.size(), sys.state_dim, "initial state");
  for (std::size_t i = 0; i < sys.steps; ++i) {
    const VarVector d = sys.delta(y, xv, i);
    expect_size(d.size(), sys.state_dim, "delta output");
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = y[k] + d[k];
  }
  set_outputs(tape, y);
  DifferenceTraceResult res;
  res.gradient = ad::reverse_sweep(tape, alpha);
  res.final_state = ad::values(y);
  res.tape_length = tape.size();
  return res;
}

}  // namespace impdiff::difference
